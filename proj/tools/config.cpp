#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace bioremed::cli {

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"scenario", {"model", "V", "V_r", "p", "V1", "V2", "S0", "S1_0", "S2_0", "S_target"}},
      {"law", {"law", "mu_max", "K", "mu"}},
      {"strategy", {"strategy", "strategies"}},
      {"numerics",
       {"rtol", "grid_size", "hjb_nodes", "hjb_n1", "hjb_n2", "hjb_controls", "hjb_margin",
        "hjb_s2_min", "certify_tol_1d", "certify_tol_2d", "allow_small_p"}},
      {"output", {"dir"}},
      {"sweep", {}},  // keys of the sections above, qualified or bare
  };
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

// Section owning a bare key, excluding sweep. Throws when absent or ambiguous.
std::string owner_of(const std::string& key, const std::string& where) {
  std::string found;
  for (const auto& [sec, keys] : schema()) {
    if (keys.count(key)) {
      if (!found.empty()) throw ConfigError(where + ": ambiguous key '" + key + "'");
      found = sec;
    }
  }
  if (found.empty()) throw ConfigError(where + ": unknown key '" + key + "'");
  return found;
}

[[noreturn]] void bad_value(const ConfigEntry& e, const std::string& key, const std::string& why) {
  throw ConfigError(e.origin + ": key '" + key + "': " + why + " (got '" + e.value + "')");
}

double to_double(const ConfigEntry& e, const std::string& key) {
  double v = 0.0;
  const char* first = e.value.data();
  const char* last = first + e.value.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) bad_value(e, key, "expected a number");
  return v;
}

std::size_t to_size(const ConfigEntry& e, const std::string& key) {
  std::size_t v = 0;
  const char* first = e.value.data();
  const char* last = first + e.value.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) bad_value(e, key, "expected a non-negative integer");
  return v;
}

bool to_bool(const ConfigEntry& e, const std::string& key) {
  std::string v = e.value;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(e, key, "expected a boolean");
}

class Reader {
 public:
  Reader(const ConfigDoc& doc, std::string section) : doc_(doc), section_(std::move(section)) {}

  const ConfigEntry* entry(const std::string& key) const { return doc_.find(section_, key); }
  bool has(const std::string& key) const { return entry(key) != nullptr; }

  std::optional<double> number(const std::string& key) const {
    const auto* e = entry(key);
    if (!e) return std::nullopt;
    return to_double(*e, key);
  }
  double positive(const std::string& key) const {
    const auto v = number(key);
    if (!v) throw ConfigError("[" + section_ + "]: missing required key '" + key + "'");
    if (!(*v > 0.0)) bad_value(*entry(key), key, "must be positive");
    return *v;
  }
  void size_into(const std::string& key, std::size_t& out) const {
    if (const auto* e = entry(key)) out = to_size(*e, key);
  }
  void double_into(const std::string& key, double& out) const {
    if (const auto* e = entry(key)) out = to_double(*e, key);
  }

 private:
  const ConfigDoc& doc_;
  std::string section_;
};

GrowthLaw resolve_law(const ConfigDoc& doc) {
  const Reader r(doc, "law");
  const auto* kind = r.entry("law");
  const std::string name = kind ? kind->value : "monod";
  if (name == "monod") {
    if (r.has("mu")) bad_value(*r.entry("mu"), "mu", "only valid for law = linear");
    const double mu_max = r.has("mu_max") ? r.positive("mu_max") : 1.0;
    const double k = r.has("K") ? r.positive("K") : 1.0;
    return GrowthLaw::monod(mu_max, k);
  }
  if (name == "linear") {
    for (const char* k : {"mu_max", "K"}) {
      if (r.has(k)) bad_value(*r.entry(k), k, "only valid for law = monod");
    }
    return GrowthLaw::linear(r.positive("mu"));
  }
  bad_value(*kind, "law", "expected 'monod' or 'linear'");
}

Numerics resolve_numerics(const ConfigDoc& doc) {
  const Reader r(doc, "numerics");
  Numerics n;
  r.double_into("rtol", n.rtol);
  r.size_into("grid_size", n.grid_size);
  r.size_into("hjb_nodes", n.hjb_nodes);
  r.size_into("hjb_n1", n.hjb_n1);
  r.size_into("hjb_n2", n.hjb_n2);
  r.size_into("hjb_controls", n.hjb_controls);
  r.double_into("hjb_margin", n.hjb_margin);
  r.double_into("hjb_s2_min", n.hjb_s2_min);
  r.double_into("certify_tol_1d", n.certify_tol_1d);
  r.double_into("certify_tol_2d", n.certify_tol_2d);
  if (const auto* e = r.entry("allow_small_p")) n.allow_small_p = to_bool(*e, "allow_small_p");
  if (!(n.rtol > 0.0 && n.rtol < 1e-2)) bad_value(*r.entry("rtol"), "rtol", "must lie in (0, 1e-2)");
  if (n.grid_size < 16) bad_value(*r.entry("grid_size"), "grid_size", "must be at least 16");
  if (n.hjb_margin < 1.0) bad_value(*r.entry("hjb_margin"), "hjb_margin", "must be >= 1");
  if (!(n.hjb_s2_min > 0.0 && n.hjb_s2_min < 1.0)) {
    bad_value(*r.entry("hjb_s2_min"), "hjb_s2_min", "must lie in (0, 1)");
  }
  return n;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

Scenario resolve_scenario(const ConfigDoc& doc, const Numerics& num) {
  const Reader r(doc, "scenario");
  Scenario out;
  out.law = resolve_law(doc);

  const auto* model_entry = r.entry("model");
  const std::string model = model_entry ? model_entry->value : "homogeneous";
  if (model != "homogeneous" && model != "twocomp") {
    bad_value(*model_entry, "model", "expected 'homogeneous' or 'twocomp'");
  }

  if (r.has("S0") && (r.has("S1_0") || r.has("S2_0"))) {
    bad_value(*r.entry("S0"), "S0", "conflicts with S1_0/S2_0");
  }
  const double s_target = r.positive("S_target");
  const double vr = r.positive("V_r");

  if (model == "homogeneous") {
    for (const char* k : {"p", "V1", "V2", "S2_0"}) {
      if (r.has(k)) bad_value(*r.entry(k), k, "requires model = twocomp");
    }
    const double s0 = r.has("S0") ? r.positive("S0") : r.positive("S1_0");
    HomogeneousScenario h{r.positive("V"), vr, s0, s_target};
    try {
      h.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("[scenario]: ") + e.what());
    }
    out.model = Model::kHomogeneous;
    out.homogeneous = h;
    out.label = "homogeneous V=" + fmt(h.v) + " V_r=" + fmt(vr) + " S0=" + fmt(s0) +
                " S_target=" + fmt(s_target);
    return out;
  }

  // Two compartments: either V with fraction p, or V1 and V2.
  double v1 = 0.0, v2 = 0.0;
  if (r.has("p")) {
    if (r.has("V1") || r.has("V2")) bad_value(*r.entry("p"), "p", "conflicts with V1/V2");
    const double v = r.positive("V");
    const double p = *r.number("p");
    if (!(p >= 0.0 && p < 1.0)) bad_value(*r.entry("p"), "p", "must lie in [0, 1)");
    if (p == 0.0) {
      // Homogeneous limit: dispatched to the one-compartment model.
      if (r.has("S2_0")) bad_value(*r.entry("S2_0"), "S2_0", "meaningless for p = 0");
      const double s0 = r.has("S0") ? r.positive("S0") : r.positive("S1_0");
      HomogeneousScenario h{v, vr, s0, s_target};
      try {
        h.validate();
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("[scenario]: ") + e.what());
      }
      out.model = Model::kHomogeneous;
      out.homogeneous = h;
      out.label = "p=0 (homogeneous) V=" + fmt(v) + " V_r=" + fmt(vr) + " S0=" + fmt(s0) +
                  " S_target=" + fmt(s_target);
      return out;
    }
    if (p < kSmallP && !num.allow_small_p) {
      bad_value(*r.entry("p"), "p",
                "values below " + fmt(kSmallP) + " need numerics.allow_small_p = true");
    }
    v1 = p * v;
    v2 = (1.0 - p) * v;
  } else {
    if (r.has("V")) bad_value(*r.entry("V"), "V", "twocomp needs p with V, or V1 and V2");
    v1 = r.positive("V1");
    v2 = r.positive("V2");
  }
  double s1_0 = 0.0, s2_0 = 0.0;
  if (r.has("S0")) {
    s1_0 = s2_0 = r.positive("S0");
  } else {
    s1_0 = r.positive("S1_0");
    s2_0 = r.positive("S2_0");
  }
  TwoCompScenario t{v1, v2, vr, s1_0, s2_0, s_target};
  try {
    t.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("[scenario]: ") + e.what());
  }
  out.model = Model::kTwoComp;
  out.twocomp = t;
  out.label = "twocomp p=" + fmt(t.p()) + " V=" + fmt(t.volume()) + " V_r=" + fmt(vr) +
              " S1_0=" + fmt(s1_0) + " S2_0=" + fmt(s2_0) + " S_target=" + fmt(s_target);
  return out;
}

}  // namespace

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError("empty item in list '" + text + "'");
    items.push_back(item);
  }
  if (items.empty()) throw ConfigError("empty list");
  return items;
}

const std::vector<std::string>& strategy_names() {
  static const std::vector<std::string> names = {
      "best-constant", "feedback", "synthesized", "oracle", "feedback-s1", "feedback-s2"};
  return names;
}

ConfigDoc ConfigDoc::parse(const std::string& text, const std::string& source) {
  ConfigDoc doc;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = source + ":" + std::to_string(lineno);
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!schema().count(section)) throw ConfigError(where + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    if (section.empty()) throw ConfigError(where + ": key outside of any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = unquote(trim(line.substr(eq + 1)));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (doc.find(section, key)) throw ConfigError(where + ": duplicate key '" + key + "'");
    doc.set(section, key, {value, where});
  }
  return doc;
}

ConfigDoc ConfigDoc::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path);
}

void ConfigDoc::set(const std::string& section, const std::string& key, ConfigEntry entry) {
  if (section == "sweep") {
    // Swept keys must name a sweepable parameter; store them qualified.
    std::string sec, k;
    const auto dot = key.find('.');
    if (dot == std::string::npos) {
      sec = owner_of(key, entry.origin);
      k = key;
    } else {
      sec = key.substr(0, dot);
      k = key.substr(dot + 1);
      if (!schema().count(sec) || !schema().at(sec).count(k)) {
        throw ConfigError(entry.origin + ": unknown key '" + key + "' in [sweep]");
      }
    }
    if (sec == "output" || sec == "strategy") {
      throw ConfigError(entry.origin + ": key '" + key + "' cannot be swept");
    }
    data_["sweep"][sec + "." + k] = std::move(entry);
    return;
  }
  if (!schema().at(section).count(key)) {
    throw ConfigError(entry.origin + ": unknown key '" + key + "' in [" + section + "]");
  }
  data_[section][key] = std::move(entry);
}

void ConfigDoc::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("--set " + assignment + ": expected key=value");
  }
  const std::string lhs = trim(assignment.substr(0, eq));
  const std::string value = unquote(trim(assignment.substr(eq + 1)));
  const std::string where = "--set " + lhs;
  std::string section, key;
  const auto dot = lhs.find('.');
  if (dot == std::string::npos) {
    section = owner_of(lhs, where);
    key = lhs;
  } else {
    section = lhs.substr(0, dot);
    key = lhs.substr(dot + 1);
    if (!schema().count(section)) throw ConfigError(where + ": unknown section [" + section + "]");
  }
  if (section == "sweep") {
    data_["sweep"].erase(key);
    const std::string qualified =
        key.find('.') == std::string::npos ? owner_of(key, where) + "." + key : key;
    data_["sweep"].erase(qualified);
  }
  set(section, key, {value, where});
}

const ConfigEntry* ConfigDoc::find(const std::string& section, const std::string& key) const {
  const auto s = data_.find(section);
  if (s == data_.end()) return nullptr;
  const auto k = s->second.find(key);
  return k == s->second.end() ? nullptr : &k->second;
}

const std::map<std::string, ConfigEntry>& ConfigDoc::section(const std::string& name) const {
  static const std::map<std::string, ConfigEntry> empty;
  const auto s = data_.find(name);
  return s == data_.end() ? empty : s->second;
}

RunConfig resolve(const ConfigDoc& doc) {
  RunConfig cfg;
  cfg.numerics = resolve_numerics(doc);
  cfg.scenario = resolve_scenario(doc, cfg.numerics);

  // run uses `strategy`; compare and sweep use `strategies`. Either falls
  // back to the other when only one is given.
  const Reader st(doc, "strategy");
  const auto* list = st.entry("strategies");
  const auto* one = st.entry("strategy");
  if (list) {
    try {
      cfg.strategies = split_list(list->value);
    } catch (const ConfigError& e) {
      throw ConfigError(list->origin + ": key 'strategies': " + e.what());
    }
  }
  if (one) {
    cfg.strategy = one->value;
  } else if (cfg.strategies.size() == 1) {
    cfg.strategy = cfg.strategies.front();
  } else if (!list) {
    cfg.strategy = "feedback";
  }
  if (!list && !cfg.strategy.empty()) cfg.strategies = {cfg.strategy};
  const auto& names = strategy_names();
  auto check = [&](const std::string& s, const ConfigEntry* e) {
    if (std::find(names.begin(), names.end(), s) == names.end()) {
      throw ConfigError(e->origin + ": unknown strategy '" + s + "'");
    }
  };
  if (one) check(cfg.strategy, one);
  for (const auto& s : cfg.strategies) check(s, list ? list : one);

  if (const auto* dir = doc.find("output", "dir")) cfg.out_dir = dir->value;

  for (const auto& [key, entry] : doc.section("sweep")) {
    try {
      cfg.sweep.emplace_back(key, split_list(entry.value));
    } catch (const ConfigError& e) {
      throw ConfigError(entry.origin + ": swept key '" + key + "': " + e.what());
    }
  }
  return cfg;
}

}  // namespace bioremed::cli
