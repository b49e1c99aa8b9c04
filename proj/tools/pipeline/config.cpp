#include "config.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

namespace qstrat::pipeline {

std::string to_string(SourceKind k) {
  switch (k) {
    case SourceKind::kSimulated: return "simulated";
    case SourceKind::kConstant: return "constant";
    case SourceKind::kStaticCone: return "static_cone";
    case SourceKind::kQuasistaticCone: return "quasistatic_cone";
    case SourceKind::kShrinkingProfile: return "shrinking_profile";
  }
  return "?";
}

namespace {

using nlohmann::json;

// Character iterator that records how far the parser has read.
class TrackingIterator {
 public:
  using iterator_category = std::input_iterator_tag;
  using value_type = char;
  using difference_type = std::ptrdiff_t;
  using pointer = const char*;
  using reference = const char&;

  TrackingIterator(const char* p, const char* begin, std::size_t* furthest) : p_(p), begin_(begin), furthest_(furthest) {}
  reference operator*() const {
    *furthest_ = std::max(*furthest_, static_cast<std::size_t>(p_ - begin_));
    return *p_;
  }
  TrackingIterator& operator++() {
    ++p_;
    return *this;
  }
  TrackingIterator operator++(int) {
    auto old = *this;
    ++p_;
    return old;
  }
  bool operator==(const TrackingIterator& o) const { return p_ == o.p_; }
  bool operator!=(const TrackingIterator& o) const { return p_ != o.p_; }

 private:
  const char* p_;
  const char* begin_;
  std::size_t* furthest_;
};

class PathRecorder : public json::json_sax_t {
 public:
  PathRecorder(const std::string& text, const std::size_t* furthest) : text_(text), furthest_(furthest) {}

  bool null() override { return value(); }
  bool boolean(bool) override { return value(); }
  bool number_integer(number_integer_t) override { return value(); }
  bool number_unsigned(number_unsigned_t) override { return value(); }
  bool number_float(number_float_t, const string_t&) override { return value(); }
  bool string(string_t&) override { return value(); }
  bool binary(binary_t&) override { return value(); }
  bool start_object(std::size_t) override {
    value();
    stack_.push_back({true, "", 0});
    return true;
  }
  bool key(string_t& k) override {
    stack_.back().key = escape(k);
    lines[path()] = line();
    return true;
  }
  bool end_object() override {
    stack_.pop_back();
    return true;
  }
  bool start_array(std::size_t) override {
    value();
    stack_.push_back({false, "", 0});
    return true;
  }
  bool end_array() override {
    stack_.pop_back();
    return true;
  }
  bool parse_error(std::size_t, const std::string&, const json::exception&) override { return false; }

  std::map<std::string, int> lines;

 private:
  struct Frame {
    bool object;
    std::string key;
    std::size_t index;
  };

  static std::string escape(const std::string& k) {
    std::string out;
    for (char c : k) {
      if (c == '~') out += "~0";
      else if (c == '/') out += "~1";
      else out += c;
    }
    return out;
  }
  std::string path() const {
    std::string p;
    for (const auto& f : stack_) p += "/" + (f.object ? f.key : std::to_string(f.index));
    return p;
  }
  int line() const {
    const std::size_t end = std::min(*furthest_, text_.size());
    return 1 + static_cast<int>(std::count(text_.begin(), text_.begin() + static_cast<std::ptrdiff_t>(end), '\n'));
  }
  bool value() {
    if (stack_.empty()) {
      lines[""] = line();
    } else if (!stack_.back().object) {
      lines[path()] = line();
      ++stack_.back().index;
    }
    return true;
  }

  const std::string& text_;
  const std::size_t* furthest_;
  std::vector<Frame> stack_;
};

// Walks the document with path-aware accessors.
class Reader {
 public:
  Reader(const json& doc, const std::map<std::string, int>& lines) : doc_(doc), lines_(lines) {}

  [[noreturn]] void fail(const std::string& path, const std::string& msg) const {
    std::ostringstream os;
    os << "config error at " << (path.empty() ? "/" : path);
    auto it = lines_.find(path);
    if (it != lines_.end()) os << " (line " << it->second << ")";
    os << ": " << msg;
    throw ConfigError(os.str());
  }

  const json& object(const std::string& path, const std::set<std::string>& allowed) const {
    const json& v = path.empty() ? doc_ : doc_.at(json::json_pointer(path));
    if (!v.is_object()) fail(path, "expected an object");
    for (auto it = v.begin(); it != v.end(); ++it)
      if (!allowed.contains(it.key())) fail(path + "/" + it.key(), "unknown key '" + it.key() + "'");
    return v;
  }

  bool has(const std::string& path) const { return doc_.contains(json::json_pointer(path)); }

  double number(const std::string& path, double def) const {
    if (!has(path)) return def;
    const json& v = doc_.at(json::json_pointer(path));
    if (!v.is_number()) fail(path, "expected a number");
    return v.get<double>();
  }
  int integer(const std::string& path, int def) const {
    if (!has(path)) return def;
    const json& v = doc_.at(json::json_pointer(path));
    if (!v.is_number_integer()) fail(path, "expected an integer");
    return v.get<int>();
  }
  std::uint64_t unsigned_integer(const std::string& path, std::uint64_t def) const {
    if (!has(path)) return def;
    const json& v = doc_.at(json::json_pointer(path));
    if (!v.is_number_unsigned()) fail(path, "expected a nonnegative integer");
    return v.get<std::uint64_t>();
  }
  bool boolean(const std::string& path, bool def) const {
    if (!has(path)) return def;
    const json& v = doc_.at(json::json_pointer(path));
    if (!v.is_boolean()) fail(path, "expected true or false");
    return v.get<bool>();
  }
  std::string string(const std::string& path, const std::string& def) const {
    if (!has(path)) return def;
    const json& v = doc_.at(json::json_pointer(path));
    if (!v.is_string()) fail(path, "expected a string");
    return v.get<std::string>();
  }
  template <class T>
  std::vector<T> list(const std::string& path, std::vector<T> def) const {
    if (!has(path)) return def;
    const json& v = doc_.at(json::json_pointer(path));
    if (!v.is_array()) fail(path, "expected an array");
    std::vector<T> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string p = path + "/" + std::to_string(i);
      if constexpr (std::is_integral_v<T>) {
        if (!v[i].is_number_integer()) fail(p, "expected an integer");
      } else {
        if (!v[i].is_number()) fail(p, "expected a number");
      }
      out.push_back(v[i].get<T>());
    }
    return out;
  }

 private:
  const json& doc_;
  const std::map<std::string, int>& lines_;
};

}  // namespace

std::map<std::string, int> json_path_lines(const std::string& text) {
  std::size_t furthest = 0;
  PathRecorder rec(text, &furthest);
  const char* b = text.data();
  json::sax_parse(TrackingIterator(b, b, &furthest), TrackingIterator(b + text.size(), b, &furthest), &rec);
  return rec.lines;
}

RunConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t pos = std::min<std::size_t>(e.byte, text.size());
    const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
    throw ConfigError("config error (line " + std::to_string(line) + "): malformed JSON");
  }
  const auto lines = json_path_lines(text);
  const Reader rd(doc, lines);
  RunConfig c;
  c.raw = doc;

  rd.object("", {"schema", "m", "n", "source", "scales", "strata", "dictionary", "quadrature", "cloud", "radii",
                 "regularity", "verify", "seed", "output"});
  if (!rd.has("/schema")) rd.fail("", "missing key 'schema'");
  if (rd.string("/schema", "") != kSchema) rd.fail("/schema", std::string("schema must be \"") + kSchema + "\"");
  c.m = rd.integer("/m", c.m);
  c.n = rd.integer("/n", c.n);
  if (c.m < 1 || c.m > kMaxSpatialDim) rd.fail("/m", "m must lie in [1, 4]");
  if (c.n < 1 || c.n + 1 > kMaxComponents) rd.fail("/n", "n must lie in [1, 7]");

  if (rd.has("/source")) {
    rd.object("/source", {"kind", "time", "grid", "dt_policy", "t_end", "record_every", "initial"});
    const std::string kind = rd.string("/source/kind", "static_cone");
    static const std::map<std::string, SourceKind> kinds{{"simulated", SourceKind::kSimulated},
                                                         {"constant", SourceKind::kConstant},
                                                         {"static_cone", SourceKind::kStaticCone},
                                                         {"quasistatic_cone", SourceKind::kQuasistaticCone},
                                                         {"shrinking_profile", SourceKind::kShrinkingProfile}};
    auto it = kinds.find(kind);
    if (it == kinds.end())
      rd.fail("/source/kind", "kind must be simulated, constant, static_cone, quasistatic_cone or shrinking_profile");
    c.source.kind = it->second;
    c.source.time = rd.number("/source/time", c.source.time);
    if (rd.has("/source/grid")) {
      rd.object("/source/grid", {"n_cells", "length"});
      c.source.n_cells = rd.integer("/source/grid/n_cells", c.source.n_cells);
      c.source.length = rd.number("/source/grid/length", c.source.length);
      if (c.source.n_cells < 4) rd.fail("/source/grid/n_cells", "need at least 4 cells per axis");
      if (!(c.source.length > 0.0)) rd.fail("/source/grid/length", "length must be positive");
    }
    if (rd.has("/source/dt_policy")) {
      rd.object("/source/dt_policy", {"sigma", "dt"});
      c.source.sigma = rd.number("/source/dt_policy/sigma", c.source.sigma);
      c.source.dt = rd.number("/source/dt_policy/dt", c.source.dt);
      if (!(c.source.sigma > 0.0 && c.source.sigma <= 0.5)) rd.fail("/source/dt_policy/sigma", "sigma must lie in (0, 0.5]");
      if (c.source.dt < 0.0) rd.fail("/source/dt_policy/dt", "dt must be nonnegative");
    }
    c.source.t_end = rd.number("/source/t_end", c.source.t_end);
    if (!(c.source.t_end > 0.0)) rd.fail("/source/t_end", "t_end must be positive");
    c.source.record_every = rd.integer("/source/record_every", c.source.record_every);
    if (c.source.record_every < 1) rd.fail("/source/record_every", "record_every must be positive");
    if (rd.has("/source/initial")) {
      rd.object("/source/initial", {"modes", "amplitude"});
      c.source.modes = rd.integer("/source/initial/modes", c.source.modes);
      c.source.amplitude = rd.number("/source/initial/amplitude", c.source.amplitude);
      if (c.source.modes < 0) rd.fail("/source/initial/modes", "modes must be nonnegative");
      if (!(c.source.amplitude >= 0.0)) rd.fail("/source/initial/amplitude", "amplitude must be nonnegative");
    }
    if ((c.source.kind == SourceKind::kStaticCone || c.source.kind == SourceKind::kQuasistaticCone) && c.m < 3)
      rd.fail("/source/kind", "cone sources need m >= 3");
  }

  if (rd.has("/scales")) {
    rd.object("/scales", {"gamma", "q", "delta", "beta", "R"});
    c.scales.gamma = rd.number("/scales/gamma", c.scales.gamma);
    c.scales.q = rd.integer("/scales/q", c.scales.q);
    c.scales.delta = rd.number("/scales/delta", c.scales.delta);
    c.scales.beta = rd.integer("/scales/beta", c.scales.beta);
    c.scales.R = rd.number("/scales/R", c.scales.R);
  }
  if (!(c.scales.gamma > 0.0 && c.scales.gamma < 0.5)) rd.fail("/scales/gamma", "scale ratio must satisfy 0<gamma<1/2");
  if (c.scales.q < 1) rd.fail("/scales/q", "q must be at least 1");
  if (!(c.scales.delta > 0.0)) rd.fail("/scales/delta", "delta must be positive");
  if (c.scales.beta < 1) rd.fail("/scales/beta", "beta must be at least 1");
  if (!(c.scales.R > 0.0)) rd.fail("/scales/R", "R must be positive");

  if (rd.has("/strata")) {
    rd.object("/strata", {"eta", "j", "r"});
    c.strata.eta = rd.number("/strata/eta", c.strata.eta);
    c.strata.j = rd.list<int>("/strata/j", c.strata.j);
    c.strata.r = rd.list<double>("/strata/r", c.strata.r);
  }
  if (!(c.strata.eta > 0.0)) rd.fail("/strata/eta", "eta must be positive");
  for (std::size_t i = 0; i < c.strata.j.size(); ++i)
    if (c.strata.j[i] < 0 || c.strata.j[i] > c.m + 2) rd.fail("/strata/j/" + std::to_string(i), "j must lie in [0, m+2]");
  for (std::size_t i = 0; i < c.strata.r.size(); ++i)
    if (!(c.strata.r[i] > 0.0 && c.strata.r[i] <= c.scales.R))
      rd.fail("/strata/r/" + std::to_string(i), "radii must lie in (0, R]");

  if (rd.has("/dictionary")) {
    rd.object("/dictionary", {"planes_per_dim", "refine_rounds", "truncations", "window_cells", "backward_only",
                              "include_constant", "include_cones", "include_quasistatic", "include_shrinking"});
    c.dictionary.planes_per_dim = rd.integer("/dictionary/planes_per_dim", c.dictionary.planes_per_dim);
    c.dictionary.refine_rounds = rd.integer("/dictionary/refine_rounds", c.dictionary.refine_rounds);
    c.dictionary.truncations = rd.integer("/dictionary/truncations", c.dictionary.truncations);
    c.window_cells = rd.integer("/dictionary/window_cells", c.window_cells);
    c.dictionary.backward_only = rd.boolean("/dictionary/backward_only", c.dictionary.backward_only);
    c.dictionary.include_constant = rd.boolean("/dictionary/include_constant", c.dictionary.include_constant);
    c.dictionary.include_cones = rd.boolean("/dictionary/include_cones", c.dictionary.include_cones);
    c.dictionary.include_quasistatic = rd.boolean("/dictionary/include_quasistatic", c.dictionary.include_quasistatic);
    c.dictionary.include_shrinking = rd.boolean("/dictionary/include_shrinking", c.dictionary.include_shrinking);
    if (c.dictionary.planes_per_dim < 0) rd.fail("/dictionary/planes_per_dim", "must be nonnegative");
    if (c.dictionary.refine_rounds < 0) rd.fail("/dictionary/refine_rounds", "must be nonnegative");
    if (c.dictionary.truncations < 1) rd.fail("/dictionary/truncations", "need at least one truncation time");
    if (c.window_cells < 3) rd.fail("/dictionary/window_cells", "need at least 3 window cells");
  }

  if (rd.has("/quadrature")) {
    rd.object("/quadrature", {"xi_extent", "xi_step", "sigma_step"});
    c.quadrature.xi_extent = rd.number("/quadrature/xi_extent", c.quadrature.xi_extent);
    c.quadrature.xi_step = rd.number("/quadrature/xi_step", c.quadrature.xi_step);
    c.quadrature.sigma_step = rd.number("/quadrature/sigma_step", c.quadrature.sigma_step);
    for (const char* k : {"/quadrature/xi_extent", "/quadrature/xi_step", "/quadrature/sigma_step"})
      if (!(rd.number(k, 1.0) > 0.0)) rd.fail(k, "must be positive");
  }

  if (rd.has("/cloud")) {
    rd.object("/cloud", {"kind", "count", "center", "extent", "t_center", "t_extent", "time_count"});
    c.cloud.kind = rd.string("/cloud/kind", c.cloud.kind);
    if (c.cloud.kind != "lattice" && c.cloud.kind != "random") rd.fail("/cloud/kind", "kind must be lattice or random");
    c.cloud.count = rd.integer("/cloud/count", c.cloud.count);
    c.cloud.center = rd.list<double>("/cloud/center", c.cloud.center);
    c.cloud.extent = rd.number("/cloud/extent", c.cloud.extent);
    c.cloud.t_center = rd.number("/cloud/t_center", c.cloud.t_center);
    c.cloud.t_extent = rd.number("/cloud/t_extent", c.cloud.t_extent);
    c.cloud.time_count = rd.integer("/cloud/time_count", c.cloud.time_count);
    if (c.cloud.count < 0) rd.fail("/cloud/count", "count must be nonnegative");
    if (!c.cloud.center.empty() && static_cast<int>(c.cloud.center.size()) != c.m)
      rd.fail("/cloud/center", "center must have m entries");
    if (c.cloud.extent < 0.0) rd.fail("/cloud/extent", "extent must be nonnegative");
    if (c.cloud.t_extent < 0.0) rd.fail("/cloud/t_extent", "t_extent must be nonnegative");
    if (c.cloud.time_count < 1) rd.fail("/cloud/time_count", "time_count must be positive");
  }

  c.radii = rd.list<double>("/radii", c.radii);
  for (std::size_t i = 0; i < c.radii.size(); ++i)
    if (!(c.radii[i] > 0.0)) rd.fail("/radii/" + std::to_string(i), "radii must be positive");

  if (rd.has("/regularity")) {
    rd.object("/regularity", {"R_max", "probe_step"});
    c.regularity.R_max = rd.number("/regularity/R_max", c.regularity.R_max);
    c.regularity.probe_step = rd.number("/regularity/probe_step", c.regularity.probe_step);
    if (!(c.regularity.R_max > 0.0)) rd.fail("/regularity/R_max", "R_max must be positive");
    if (c.regularity.probe_step < 0.0) rd.fail("/regularity/probe_step", "probe_step must be nonnegative");
  }

  if (rd.has("/verify")) {
    rd.object("/verify", {"epsilons", "cone_split", "rho", "correlation_j"});
    c.verify.epsilons = rd.list<double>("/verify/epsilons", c.verify.epsilons);
    c.verify.cone_split = rd.boolean("/verify/cone_split", c.verify.cone_split);
    c.verify.rho = rd.number("/verify/rho", c.verify.rho);
    c.verify.correlation_j = rd.integer("/verify/correlation_j", c.verify.correlation_j);
    if (!(c.verify.rho > 0.0)) rd.fail("/verify/rho", "rho must be positive");
    if (c.verify.correlation_j > c.m + 2) rd.fail("/verify/correlation_j", "must not exceed m+2");
  }

  c.seed = rd.unsigned_integer("/seed", c.seed);
  c.dictionary.seed = c.seed;
  c.output = rd.string("/output", c.output);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace qstrat::pipeline
