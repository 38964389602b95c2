#include "nlperim/config.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "nlperim/error.hpp"

namespace nlperim {

namespace {

struct Entry {
  std::string value;
  int line = 0;
};

using Section = std::map<std::string, Entry>;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ConfigError(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg);
}

const std::map<std::string, std::vector<std::string>>& key_table() {
  static const std::map<std::string, std::vector<std::string>> table = {
      {"", {"command", "seed", "output", "formats"}},
      {"kernel",
       {"family", "dimension", "s", "p", "matrix", "lambda", "Lambda", "amplitude", "sigma", "mu",
        "r", "table", "eps", "refined_radius"}},
      {"grid", {"dimension", "n", "half_width", "mode"}},
      {"solver", {"method", "init", "mass", "max_iters", "stop_tol", "restarts", "initial"}},
      {"certify", {"input", "tol_f", "tol_v", "sv_trials"}},
      {"perimeter", {"input"}},
      {"profile", {"masses", "c_iso"}},
      {"check", {"trials", "thresholds", "c_iso", "suites"}},
  };
  return table;
}

std::vector<std::string> section_names() {
  std::vector<std::string> out;
  for (const auto& [name, keys] : key_table())
    if (!name.empty()) out.push_back(name);
  return out;
}

double to_double(const Entry& e, const std::string& key) {
  const std::string& v = e.value;
  if (v == "inf" || v == "infinity") return std::numeric_limits<double>::infinity();
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    fail(e.line, key + " = " + v + " is not a number");
  return out;
}

long long to_int(const Entry& e, const std::string& key) {
  const std::string& v = e.value;
  long long out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    fail(e.line, key + " = " + v + " is not an integer");
  return out;
}

std::uint64_t to_u64(const Entry& e, const std::string& key) {
  const std::string& v = e.value;
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    fail(e.line, key + " = " + v + " is not an unsigned 64-bit integer");
  return out;
}

std::vector<std::string> to_list(const Entry& e) {
  std::vector<std::string> out;
  std::stringstream ss(e.value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> to_double_list(const Entry& e, const std::string& key) {
  std::vector<double> out;
  for (const auto& item : to_list(e)) out.push_back(to_double(Entry{item, e.line}, key));
  return out;
}

std::string resolve(const std::string& base, const std::string& path, int line) {
  std::filesystem::path p(path);
  if (p.is_relative()) p = std::filesystem::path(base) / p;
  if (!std::filesystem::exists(p)) fail(line, "referenced file does not exist: " + p.string());
  return p.string();
}

const Entry* find(const Section& s, const std::string& key) {
  auto it = s.find(key);
  return it == s.end() ? nullptr : &it->second;
}

const Entry& require(const Section& s, const std::string& section, const std::string& key) {
  const Entry* e = find(s, key);
  if (!e) fail(0, "missing required key '" + key + "' in [" + section + "]");
  return *e;
}

// Keys that only make sense for some kernel families.
bool key_applies(const std::string& key, KernelFamily family) {
  const bool fractional = family == KernelFamily::kFractional ||
                          family == KernelFamily::kAnisotropicFractional ||
                          family == KernelFamily::kHeterogeneousFractional;
  if (key == "s") return fractional;
  if (key == "p" || key == "matrix") return family == KernelFamily::kAnisotropicFractional;
  if (key == "lambda" || key == "Lambda" || key == "amplitude")
    return family == KernelFamily::kHeterogeneousFractional;
  if (key == "sigma") return family == KernelFamily::kGaussian;
  if (key == "mu" || key == "r") return family == KernelFamily::kBallIndicator;
  if (key == "table") return family == KernelFamily::kTabulated;
  return true;
}

KernelBlock build_kernel(const Section& s, int grid_dim, const std::string& base) {
  KernelBlock block;
  const Entry& fam = require(s, "kernel", "family");
  const auto family = parse_kernel_family(fam.value);
  if (!family) {
    std::vector<std::string> names = {"fractional", "anisotropic_fractional",
                                      "heterogeneous_fractional", "gaussian", "ball_indicator",
                                      "tabulated"};
    fail(fam.line, "unknown kernel family '" + fam.value + "'; did you mean '" +
                       nearest(fam.value, names) + "'?");
  }
  for (const auto& [key, entry] : s) {
    if (!key_applies(key, *family))
      fail(entry.line, "key '" + key + "' does not apply to kernel family " + fam.value);
  }
  KernelSpec& k = block.spec;
  k.family = *family;
  k.dimension = grid_dim;
  if (const Entry* e = find(s, "dimension")) {
    const long long d = to_int(*e, "dimension");
    if (d != grid_dim)
      fail(e->line, "kernel dimension " + std::to_string(d) + " differs from grid dimension " +
                        std::to_string(grid_dim));
  }
  auto positive = [&](const std::string& key, double& target) {
    if (const Entry* e = find(s, key)) {
      target = to_double(*e, key);
      if (!(target > 0.0) || !std::isfinite(target))
        fail(e->line, key + " = " + e->value + " must be positive and finite");
    }
  };
  switch (*family) {
    case KernelFamily::kFractional:
    case KernelFamily::kAnisotropicFractional:
    case KernelFamily::kHeterogeneousFractional: {
      const Entry& e = require(s, "kernel", "s");
      k.s = to_double(e, "s");
      if (!(k.s > 0.0 && k.s < 1.0))
        fail(e.line, "s = " + e.value +
                         " is outside (0,1); the fractional kernel |x|^(-N-s) is defined for "
                         "s in (0,1)");
      break;
    }
    default:
      break;
  }
  if (*family == KernelFamily::kAnisotropicFractional) {
    if (const Entry* e = find(s, "p")) k.anisotropy.p = to_double(*e, "p");
    if (const Entry* e = find(s, "matrix")) k.anisotropy.matrix = to_double_list(*e, "matrix");
    if (find(s, "p") && find(s, "matrix")) fail(find(s, "p")->line, "give either p or matrix, not both");
  }
  if (*family == KernelFamily::kHeterogeneousFractional) {
    positive("lambda", k.amplitude_min);
    k.amplitude_max = k.amplitude_min;
    positive("Lambda", k.amplitude_max);
    if (const Entry* e = find(s, "amplitude")) {
      const auto a = parse_amplitude(e->value);
      if (!a)
        fail(e->line, "unknown amplitude '" + e->value + "'; did you mean '" +
                          nearest(e->value, {"constant", "angular", "periodic"}) + "'?");
      k.amplitude = *a;
    }
  }
  if (*family == KernelFamily::kGaussian) positive("sigma", k.sigma);
  if (*family == KernelFamily::kBallIndicator) {
    positive("mu", k.mu);
    positive("r", k.radius);
  }
  if (*family == KernelFamily::kTabulated) {
    const Entry& e = require(s, "kernel", "table");
    const std::string path = resolve(base, e.value, e.line);
    Field samples;
    try {
      samples = load_nlpg1(path);
    } catch (const Error& err) {
      fail(e.line, std::string("cannot load kernel table: ") + err.what());
    }
    if (samples.grid().dimension != grid_dim) fail(e.line, "kernel table dimension differs from the grid");
    k = KernelSpec::tabulated(std::move(samples), e.value);
  }
  if (const Entry* e = find(s, "eps")) {
    const double eps = to_double(*e, "eps");
    if (!(eps > 0.0)) fail(e->line, "eps must be positive");
    block.eps = eps;
  }
  if (const Entry* e = find(s, "refined_radius")) {
    block.refined_radius = static_cast<int>(to_int(*e, "refined_radius"));
    if (block.refined_radius < 0) fail(e->line, "refined_radius must be nonnegative");
  }
  try {
    k.validate();
  } catch (const DomainError& err) {
    fail(fam.line, err.what());
  }
  return block;
}

int edit_distance(const std::string& a, const std::string& b) {
  std::vector<int> prev(b.size() + 1);
  std::vector<int> cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

const char* to_string(Command c) {
  switch (c) {
    case Command::kKernel:
      return "kernel";
    case Command::kPerimeter:
      return "perimeter";
    case Command::kProfile:
      return "profile";
    case Command::kMinimize:
      return "minimize";
    case Command::kCertify:
      return "certify";
    case Command::kCheck:
      return "check";
  }
  return "unknown";
}

bool RunConfig::wants(const std::string& format) const {
  return std::find(formats.begin(), formats.end(), format) != formats.end();
}

const std::vector<std::string>& config_keys(const std::string& section) {
  static const std::vector<std::string> none;
  auto it = key_table().find(section);
  return it == key_table().end() ? none : it->second;
}

std::string nearest(const std::string& word, const std::vector<std::string>& candidates) {
  std::string best;
  int best_d = std::numeric_limits<int>::max();
  for (const auto& c : candidates) {
    const int d = edit_distance(word, c);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

std::vector<std::string> parse_formats(const std::string& list) {
  std::vector<std::string> out = to_list(Entry{list, 0});
  if (out.empty()) throw ConfigError("empty format list");
  for (const auto& f : out)
    if (f != "json" && f != "csv" && f != "nlpg1")
      throw ConfigError("unknown format '" + f + "'; choose from json, csv, nlpg1");
  return out;
}

RunConfig parse_config(std::string_view text, const std::string& base_dir) {
  std::map<std::string, Section> sections;
  sections[""];
  std::string current;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "malformed section header '" + line + "'");
      current = trim(std::string_view(line).substr(1, line.size() - 2));
      if (!key_table().count(current) || current.empty())
        fail(line_no, "unknown section [" + current + "]; did you mean [" +
                          nearest(current, section_names()) + "]?");
      if (sections.count(current)) fail(line_no, "duplicate section [" + current + "]");
      sections[current];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "expected 'key = value', got '" + line + "'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (const auto hash = value.find(" #"); hash != std::string::npos) value = trim(value.substr(0, hash));
    if (key.empty()) fail(line_no, "missing key before '='");
    const auto& keys = config_keys(current);
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      const std::string where = current.empty() ? "at top level" : "in [" + current + "]";
      fail(line_no, "unknown key '" + key + "' " + where + "; did you mean '" +
                        nearest(key, keys) + "'?");
    }
    if (value.empty()) fail(line_no, "key '" + key + "' has an empty value");
    Section& sec = sections[current];
    if (sec.count(key)) fail(line_no, "duplicate key '" + key + "'");
    sec[key] = Entry{value, line_no};
  }

  RunConfig cfg;
  {
    std::ostringstream canon;
    for (const auto& [name, sec] : sections)
      for (const auto& [key, entry] : sec) canon << (name.empty() ? "" : name + ".") << key << '=' << entry.value << '\n';
    cfg.canonical = canon.str();
  }

  const Section& top = sections[""];
  {
    const Entry& c = require(top, "top level", "command");
    const std::vector<std::string> commands = {"kernel", "perimeter", "profile", "minimize", "certify", "check"};
    bool found = false;
    for (auto cmd : {Command::kKernel, Command::kPerimeter, Command::kProfile, Command::kMinimize,
                     Command::kCertify, Command::kCheck}) {
      if (c.value == to_string(cmd)) {
        cfg.command = cmd;
        found = true;
      }
    }
    if (!found)
      fail(c.line, "unknown command '" + c.value + "'; did you mean '" + nearest(c.value, commands) + "'?");
  }
  if (const Entry* e = find(top, "seed")) cfg.seed = to_u64(*e, "seed");
  if (const Entry* e = find(top, "output")) {
    std::filesystem::path p(e->value);
    cfg.output = p.is_relative() ? (std::filesystem::path(base_dir) / p).string() : p.string();
  }
  if (const Entry* e = find(top, "formats")) {
    try {
      cfg.formats = parse_formats(e->value);
    } catch (const ConfigError& err) {
      fail(e->line, err.what());
    }
  }

  if (!sections.count("grid")) fail(0, "missing required section [grid]");
  if (!sections.count("kernel")) fail(0, "missing required section [kernel]");
  {
    const Section& g = sections["grid"];
    const Entry& dim = require(g, "grid", "dimension");
    const Entry& n = require(g, "grid", "n");
    const Entry& hw = require(g, "grid", "half_width");
    const long long d = to_int(dim, "dimension");
    if (d < 1 || d > 3) fail(dim.line, "grid dimension must be 1, 2 or 3");
    const long long cells = to_int(n, "n");
    if (cells < 4) fail(n.line, "grid needs n >= 4");
    const double half = to_double(hw, "half_width");
    if (!(half > 0.0) || !std::isfinite(half)) fail(hw.line, "half_width must be positive");
    BoundaryMode mode = BoundaryMode::kFree;
    if (const Entry* e = find(g, "mode")) {
      if (e->value == "periodic") {
        mode = BoundaryMode::kPeriodic;
      } else if (e->value != "free") {
        fail(e->line, "grid mode must be free or periodic");
      }
    }
    cfg.grid = make_grid(static_cast<int>(d), static_cast<int>(cells), half, mode);
  }
  cfg.kernel = build_kernel(sections["kernel"], cfg.grid.dimension, base_dir);

  if (sections.count("solver")) {
    const Section& s = sections["solver"];
    SolverConfig sc;
    sc.seed = cfg.seed;
    const Entry& m = require(s, "solver", "mass");
    sc.target_mass = to_double(m, "mass");
    if (!(sc.target_mass > 0.0) || sc.target_mass > cfg.grid.box_volume())
      fail(m.line, "mass must lie in (0, box volume]");
    if (const Entry* e = find(s, "method")) {
      if (e->value == "pg") {
        sc.method = AscentMethod::kProjectedGradient;
      } else if (e->value == "fw") {
        sc.method = AscentMethod::kFrankWolfe;
      } else {
        fail(e->line, "method must be pg or fw");
      }
    }
    if (const Entry* e = find(s, "init")) {
      if (e->value == "ball") {
        sc.init = InitKind::kBall;
      } else if (e->value == "random") {
        sc.init = InitKind::kRandom;
      } else if (e->value == "file") {
        sc.init = InitKind::kFile;
      } else {
        fail(e->line, "init must be ball, random or file");
      }
    }
    if (const Entry* e = find(s, "max_iters")) {
      sc.max_iters = static_cast<int>(to_int(*e, "max_iters"));
      if (sc.max_iters < 1) fail(e->line, "max_iters must be at least 1");
    }
    if (const Entry* e = find(s, "stop_tol")) {
      sc.stop_tol = to_double(*e, "stop_tol");
      if (!(sc.stop_tol > 0.0)) fail(e->line, "stop_tol must be positive");
    }
    if (const Entry* e = find(s, "restarts")) {
      sc.restarts = static_cast<int>(to_int(*e, "restarts"));
      if (sc.restarts < 1) fail(e->line, "restarts must be at least 1");
    }
    if (const Entry* e = find(s, "initial")) cfg.solver_initial_path = resolve(base_dir, e->value, e->line);
    if (sc.init == InitKind::kFile && cfg.solver_initial_path.empty())
      fail(0, "init = file needs [solver] initial = PATH");
    cfg.solver = sc;
  }
  if (sections.count("certify")) {
    const Section& s = sections["certify"];
    if (const Entry* e = find(s, "input")) cfg.certify_input = resolve(base_dir, e->value, e->line);
    if (const Entry* e = find(s, "tol_f")) cfg.certify.tol_f = to_double(*e, "tol_f");
    if (const Entry* e = find(s, "tol_v")) cfg.certify.tol_v = to_double(*e, "tol_v");
    if (const Entry* e = find(s, "sv_trials")) cfg.certify.sv_trials = static_cast<int>(to_int(*e, "sv_trials"));
  }
  if (sections.count("perimeter")) {
    const Section& s = sections["perimeter"];
    const Entry& e = require(s, "perimeter", "input");
    cfg.perimeter_input = resolve(base_dir, e.value, e.line);
  }
  if (sections.count("profile")) {
    const Section& s = sections["profile"];
    const Entry& e = require(s, "profile", "masses");
    cfg.profile.masses = to_double_list(e, "masses");
    for (double m : cfg.profile.masses)
      if (!(m > 0.0)) fail(e.line, "profile masses must be positive");
    if (const Entry* c = find(s, "c_iso")) cfg.profile.c_iso = to_double(*c, "c_iso");
  }
  if (sections.count("check")) {
    const Section& s = sections["check"];
    if (const Entry* e = find(s, "trials")) cfg.check.trials = static_cast<int>(to_int(*e, "trials"));
    if (const Entry* e = find(s, "thresholds")) {
      cfg.check.thresholds = static_cast<int>(to_int(*e, "thresholds"));
      if (cfg.check.thresholds < 2) fail(e->line, "thresholds must be at least 2");
    }
    if (const Entry* e = find(s, "c_iso")) cfg.check.c_iso = to_double(*e, "c_iso");
    if (const Entry* e = find(s, "suites")) cfg.check.suites = to_list(*e);
  }

  switch (cfg.command) {
    case Command::kMinimize:
      if (!cfg.solver) fail(0, "command minimize needs a [solver] section");
      break;
    case Command::kCertify:
      if (cfg.certify_input.empty()) fail(0, "command certify needs [certify] input = PATH");
      break;
    case Command::kPerimeter:
      if (cfg.perimeter_input.empty()) fail(0, "command perimeter needs [perimeter] input = PATH");
      break;
    case Command::kProfile:
      if (cfg.profile.masses.empty()) fail(0, "command profile needs [profile] masses = m1, m2, ...");
      break;
    default:
      break;
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path();
  return parse_config(ss.str(), dir.empty() ? "." : dir.string());
}

}  // namespace nlperim
