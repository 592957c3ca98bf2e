// Command-line surface: run simulations, verification sweeps,
// reparametrization checks, and coordinate bracket tables over the bundled
// (or config-defined) systems. Reports are written with fixed key order and
// 17 significant digits so identical runs produce identical bytes.

#include <cstdio>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <maupertuis/maupertuis.hpp>

namespace {

using maup::ConfigError;
using maup::Mat;
using maup::PhasePoint;
using maup::SystemBundle;
using maup::Trajectory;
using maup::Vec;

using Config = std::map<std::string, std::string>;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 8);
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// key = value lines with optional [section] headers; '#' starts a comment.
Config load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  Config cfg;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(path + ":" + std::to_string(lineno) + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError(path + ":" + std::to_string(lineno) + ": empty section name");
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
    cfg[section.empty() ? key : section + "." + key] = value;
  }
  return cfg;
}

void validate_keys(const Config& cfg) {
  static const char* known[] = {
      "system",           "energy",
      "initial.q",        "initial.y",
      "integrator.method", "integrator.step",    "integrator.t_final",
      "integrator.abs_tol", "integrator.rel_tol", "integrator.stride",
      "verify.samples",   "verify.fd_step",      "verify.tolerance", "verify.seed",
      "output.dir",
      "inline.m",         "inline.n",            "inline.rho",
      "inline.structure", "inline.cometric"};
  for (const auto& kv : cfg) {
    if (kv.first.rfind("params.", 0) == 0) continue;
    bool ok = false;
    for (const char* k : known)
      if (kv.first == k) ok = true;
    if (!ok) throw ConfigError("unknown config key: " + kv.first);
  }
}

const std::string* get(const Config& cfg, const std::string& key) {
  auto it = cfg.find(key);
  return it == cfg.end() ? nullptr : &it->second;
}

double get_double(const Config& cfg, const std::string& key, double fallback) {
  const std::string* s = get(cfg, key);
  return s ? maup::detail::parse_number(key, *s) : fallback;
}

long get_int(const Config& cfg, const std::string& key, long fallback) {
  const std::string* s = get(cfg, key);
  if (!s) return fallback;
  const double v = maup::detail::parse_number(key, *s);
  const long n = static_cast<long>(v);
  if (static_cast<double>(n) != v) throw ConfigError(key + " must be an integer");
  return n;
}

unsigned long long get_seed(const Config& cfg, unsigned long long fallback) {
  const std::string* s = get(cfg, "verify.seed");
  if (!s) return fallback;
  if (s->empty() || s->find_first_not_of("0123456789") != std::string::npos)
    throw ConfigError("verify.seed must be a nonnegative integer");
  return std::strtoull(s->c_str(), nullptr, 10);
}

Mat table_from_values(const Vec& v, Eigen::Index rows, Eigen::Index cols,
                      const std::string& key) {
  if (v.size() != rows * cols)
    throw ConfigError(key + " needs " + std::to_string(rows * cols) + " values");
  Mat out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) out(r, c) = v[r * cols + c];
  return out;
}

SystemBundle build_inline(const Config& cfg) {
  for (const auto& kv : cfg)
    if (kv.first.rfind("params.", 0) == 0)
      throw ConfigError("inline systems are defined by inline.* tables, not params.*");
  const long m = get_int(cfg, "inline.m", -1);
  const long n = get_int(cfg, "inline.n", -1);
  if (m < 0 || n < 1) throw ConfigError("inline systems need inline.m and inline.n");

  Mat rho = Mat::Zero(m, n);
  if (const std::string* s = get(cfg, "inline.rho"))
    rho = table_from_values(maup::detail::parse_vector("inline.rho", *s), m, n, "inline.rho");
  else if (m > 0)
    throw ConfigError("inline.rho is required when inline.m > 0");

  const std::string* cs = get(cfg, "inline.structure");
  if (!cs) throw ConfigError("inline.structure is required");
  const Vec call = maup::detail::parse_vector("inline.structure", *cs);
  if (call.size() != n * n * n)
    throw ConfigError("inline.structure needs " + std::to_string(n * n * n) + " values");
  std::vector<Mat> C;
  for (long g = 0; g < n; ++g)
    C.push_back(table_from_values(Vec(call.segment(g * n * n, n * n)), n, n,
                                  "inline.structure"));

  const std::string* gs = get(cfg, "inline.cometric");
  if (!gs) throw ConfigError("inline.cometric is required");
  const Mat g0 =
      table_from_values(maup::detail::parse_vector("inline.cometric", *gs), n, n,
                        "inline.cometric");
  return maup::inline_system(m, n, rho, C, g0);
}

SystemBundle build_bundle(const Config& cfg) {
  const std::string* name = get(cfg, "system");
  if (!name) throw ConfigError("no system selected (key 'system' or flag --system)");
  if (*name == "inline") return build_inline(cfg);
  std::map<std::string, std::string> params;
  for (const auto& kv : cfg)
    if (kv.first.rfind("params.", 0) == 0) params[kv.first.substr(7)] = kv.second;
  return maup::make_system(*name, params);
}

PhasePoint initial_state(const Config& cfg, const SystemBundle& b) {
  Vec q = b.default_state.q;
  Vec y = b.default_state.y;
  if (const std::string* s = get(cfg, "initial.q")) {
    q = maup::detail::parse_vector("initial.q", *s);
    if (q.size() != b.model.m) throw ConfigError("initial.q needs base_dim components");
  } else if (b.model.m == 0) {
    q = Vec();
  }
  if (const std::string* s = get(cfg, "initial.y")) {
    y = maup::detail::parse_vector("initial.y", *s);
    if (y.size() != b.model.n) throw ConfigError("initial.y needs fiber_dim components");
  }
  return PhasePoint(q, y);
}

maup::IntegrateOptions integrator_options(const Config& cfg, const SystemBundle& b) {
  maup::IntegrateOptions opts;
  if (const std::string* s = get(cfg, "integrator.method")) opts.method = *s;
  opts.step = get_double(cfg, "integrator.step", 1e-3);
  opts.abs_tol = get_double(cfg, "integrator.abs_tol", 1e-10);
  opts.rel_tol = get_double(cfg, "integrator.rel_tol", 1e-9);
  const long stride = get_int(cfg, "integrator.stride", 1);
  if (stride < 1) throw ConfigError("integrator.stride must be >= 1");
  opts.stride = static_cast<int>(stride);
  opts.domain = b.flow_domain;
  opts.hamiltonian = b.hamiltonian_function();
  for (const auto& c : b.conserved) opts.conserved.push_back(c.value);
  return opts;
}

std::filesystem::path output_dir(const Config& cfg) {
  std::string dir = ".";
  if (const char* env = std::getenv("MAUPERTUIS_OUT_DIR")) dir = env;
  if (const std::string* s = get(cfg, "output.dir")) dir = *s;
  std::filesystem::path p(dir);
  std::filesystem::create_directories(p);
  return p;
}

void write_csv(const std::filesystem::path& path, const SystemBundle& b,
               const Trajectory& traj, bool with_sphere, double e) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "s";
  for (Eigen::Index i = 0; i < b.model.m; ++i) out << ",q_" << (i + 1);
  for (Eigen::Index a = 0; a < b.model.n; ++a) out << ",y_" << (a + 1);
  out << ",H";
  for (const auto& c : b.conserved) out << "," << c.name;
  if (with_sphere) out << ",sphere_residual";
  out << "\n";
  for (std::size_t k = 0; k < traj.size(); ++k) {
    out << fmt(traj.t[k]);
    for (Eigen::Index i = 0; i < traj.z[k].size(); ++i) out << "," << fmt(traj.z[k][i]);
    out << "," << fmt(traj.H[k]);
    for (const auto& series : traj.conserved) out << "," << fmt(series[k]);
    if (with_sphere) {
      const PhasePoint p = PhasePoint::unpack(traj.z[k], b.model.m);
      out << "," << fmt(maup::sphere_membership(b.metric, b.potential, e, p));
    }
    out << "\n";
  }
}

int cmd_simulate(const Config& cfg) {
  const SystemBundle b = build_bundle(cfg);
  const PhasePoint p0 = initial_state(cfg, b);
  b.model.require_domain(p0.q);

  const std::string* es = get(cfg, "energy");
  const bool with_sphere = es != nullptr;
  const double e = with_sphere ? maup::detail::parse_number("energy", *es) : 0.0;
  if (with_sphere && !maup::in_energy_domain(b.potential, e, p0.q))
    throw maup::EnergyDomainError("initial base point is outside the accessible region");

  const double t_final = get_double(cfg, "integrator.t_final", 10.0);
  if (t_final < 0.0) throw ConfigError("integrator.t_final must be nonnegative");

  const Trajectory traj =
      maup::integrate(b.field(), p0.packed(), 0.0, t_final, integrator_options(cfg, b));

  const std::filesystem::path out = output_dir(cfg) / "trajectory.csv";
  write_csv(out, b, traj, with_sphere, e);
  if (traj.exit != maup::ExitReason::completed)
    std::fprintf(stderr, "trajectory truncated: %s\n", traj.exit_message.c_str());
  std::printf("%s: %zu samples, %s\n", out.string().c_str(), traj.size(),
              maup::to_string(traj.exit));
  return 0;
}

int cmd_verify(const Config& cfg) {
  const SystemBundle b = build_bundle(cfg);
  maup::VerifyOptions opts;
  opts.samples = static_cast<int>(get_int(cfg, "verify.samples", 100));
  opts.fd_step = get_double(cfg, "verify.fd_step", 1e-5);
  opts.tolerance = get_double(cfg, "verify.tolerance", 0.0);
  opts.seed = get_seed(cfg, 42);

  const maup::VerifyReport rep = maup::run_checks(b, opts);

  const std::filesystem::path out = output_dir(cfg) / "report.json";
  std::ofstream j(out);
  if (!j) throw ConfigError("cannot write " + out.string());
  j << "{\n";
  j << "  \"system\": \"" << json_escape(rep.system) << "\",\n";
  j << "  \"seed\": " << rep.seed << ",\n";
  j << "  \"samples\": " << rep.samples << ",\n";
  j << "  \"checks\": [\n";
  for (std::size_t i = 0; i < rep.checks.size(); ++i) {
    const auto& c = rep.checks[i];
    j << "    {\"name\": \"" << json_escape(c.name) << "\", \"points\": " << c.points
      << ", \"max_residual\": " << fmt(c.max_residual)
      << ", \"mean_residual\": " << fmt(c.mean_residual)
      << ", \"tolerance\": " << fmt(c.tolerance)
      << ", \"pass\": " << (c.pass ? "true" : "false") << "}"
      << (i + 1 < rep.checks.size() ? "," : "") << "\n";
  }
  j << "  ],\n";
  j << "  \"notes\": [\n";
  for (std::size_t i = 0; i < rep.notes.size(); ++i) {
    const auto& n = rep.notes[i];
    j << "    {\"name\": \"" << json_escape(n.name) << "\", \"value\": " << fmt(n.value)
      << ", \"text\": \"" << json_escape(n.text) << "\"}"
      << (i + 1 < rep.notes.size() ? "," : "") << "\n";
  }
  j << "  ],\n";
  j << "  \"all_pass\": " << (rep.all_pass() ? "true" : "false") << "\n";
  j << "}\n";
  j.close();

  for (const auto& c : rep.checks)
    std::printf("%-32s points %4d  max %-13.6g tol %-9.2g %s\n", c.name.c_str(), c.points,
                c.max_residual, c.tolerance, c.pass ? "pass" : "FAIL");
  std::printf("report: %s\n", out.string().c_str());
  return rep.all_pass() ? 0 : 1;
}

int cmd_reparam_check(const Config& cfg) {
  const SystemBundle b = build_bundle(cfg);
  const double e = get_double(cfg, "energy", b.default_energy);
  PhasePoint p0 = initial_state(cfg, b);
  b.model.require_domain(p0.q);
  p0 = maup::sphere_projection(b.metric, b.potential, e, p0);

  const double s_max = get_double(cfg, "integrator.t_final", 1.0);
  if (s_max < 0.0) throw ConfigError("integrator.t_final must be nonnegative");

  const maup::IntegrateOptions opts = integrator_options(cfg, b);
  const Trajectory mech = maup::integrate(b.field(), p0.packed(), 0.0, s_max, opts);
  if (mech.exit != maup::ExitReason::completed)
    std::fprintf(stderr, "mechanical run truncated: %s\n", mech.exit_message.c_str());

  const std::vector<double> h = maup::reparametrize(mech, b.potential, e, b.model.m);

  const maup::MetricModel ge = maup::jacobi_metric(b.metric, b.potential, e);
  const Trajectory kin =
      maup::integrate(maup::kinetic_field(b.model, ge), p0.packed(), 0.0, h.back(), opts);
  if (kin.exit != maup::ExitReason::completed)
    std::fprintf(stderr, "kinetic run truncated: %s\n", kin.exit_message.c_str());

  double gap = 0.0;
  for (std::size_t k = 0; k < mech.size(); ++k)
    gap = std::max(gap, maup::sup_norm(Vec(mech.z[k] - maup::evaluate_at(kin, h[k]))));
  bool increasing = true;
  for (std::size_t k = 0; k + 1 < h.size(); ++k) increasing = increasing && h[k + 1] > h[k];

  const double tolerance = 1e-5;
  const bool pass = gap < tolerance && increasing && h.front() == 0.0 &&
                    mech.exit == maup::ExitReason::completed &&
                    kin.exit == maup::ExitReason::completed;

  const std::filesystem::path dir = output_dir(cfg);
  write_csv(dir / "mechanical.csv", b, mech, true, e);
  write_csv(dir / "kinetic.csv", b, kin, true, e);

  std::ofstream j(dir / "report.json");
  if (!j) throw ConfigError("cannot write " + (dir / "report.json").string());
  j << "{\n";
  j << "  \"system\": \"" << json_escape(b.name) << "\",\n";
  j << "  \"energy\": " << fmt(e) << ",\n";
  j << "  \"s_max\": " << fmt(s_max) << ",\n";
  j << "  \"samples\": " << mech.size() << ",\n";
  j << "  \"gap\": " << fmt(gap) << ",\n";
  j << "  \"clock_start\": " << fmt(h.front()) << ",\n";
  j << "  \"clock_end\": " << fmt(h.back()) << ",\n";
  j << "  \"clock_strictly_increasing\": " << (increasing ? "true" : "false") << ",\n";
  j << "  \"tolerance\": " << fmt(tolerance) << ",\n";
  j << "  \"pass\": " << (pass ? "true" : "false") << "\n";
  j << "}\n";

  std::printf("gap %.6g over s in [0, %g], clock end %.6g, %s\n", gap, s_max, h.back(),
              pass ? "pass" : "FAIL");
  return pass ? 0 : 1;
}

int cmd_bracket_table(const Config& cfg, bool as_json) {
  const SystemBundle b = build_bundle(cfg);
  const PhasePoint p = initial_state(cfg, b);
  b.model.require_domain(p.q);
  const Mat P = maup::poisson_matrix(b.model, p.packed());

  std::vector<std::string> names;
  for (Eigen::Index i = 0; i < b.model.m; ++i) names.push_back("q_" + std::to_string(i + 1));
  for (Eigen::Index a = 0; a < b.model.n; ++a) names.push_back("y_" + std::to_string(a + 1));

  if (as_json) {
    std::printf("{\n  \"system\": \"%s\",\n  \"point\": [", json_escape(b.name).c_str());
    const Vec z = p.packed();
    for (Eigen::Index i = 0; i < z.size(); ++i)
      std::printf("%s%s", i ? ", " : "", fmt(z[i]).c_str());
    std::printf("],\n  \"entries\": [\n");
    bool first = true;
    for (Eigen::Index a = 0; a < P.rows(); ++a)
      for (Eigen::Index c = a + 1; c < P.cols(); ++c) {
        std::printf("%s    {\"first\": \"%s\", \"second\": \"%s\", \"value\": %s}",
                    first ? "" : ",\n", names[a].c_str(), names[c].c_str(),
                    fmt(P(a, c)).c_str());
        first = false;
      }
    std::printf("\n  ]\n}\n");
  } else {
    for (Eigen::Index a = 0; a < P.rows(); ++a)
      for (Eigen::Index c = a + 1; c < P.cols(); ++c)
        std::printf("{%s, %s} = %s\n", names[a].c_str(), names[c].c_str(),
                    fmt(P(a, c)).c_str());
  }
  return 0;
}

// Flags shadow config-file keys; a flag given on the command line wins.
struct CommonFlags {
  struct Binding {
    CLI::Option* opt = nullptr;
    std::string key;
    std::string value;
  };
  std::string config;
  std::deque<Binding> bindings;

  void bind(CLI::App* sub) {
    sub->add_option("--config", config, "config file (key = value with [section] headers)");
    add(sub, "--system", "system", "system name (or 'inline' with inline.* tables)");
    add(sub, "--energy", "energy", "energy level e");
    add(sub, "--q0", "initial.q", "initial base point, comma separated");
    add(sub, "--y0", "initial.y", "initial fiber point, comma separated");
    add(sub, "--method", "integrator.method", "integrator: rk4 | rk45");
    add(sub, "--step", "integrator.step", "integrator step");
    add(sub, "--t", "integrator.t_final", "final parameter value");
    add(sub, "--abs-tol", "integrator.abs_tol", "adaptive absolute tolerance");
    add(sub, "--rel-tol", "integrator.rel_tol", "adaptive relative tolerance");
    add(sub, "--stride", "integrator.stride", "record every n-th step");
    add(sub, "--samples", "verify.samples", "verification sample count");
    add(sub, "--fd-step", "verify.fd_step", "finite-difference step");
    add(sub, "--tolerance", "verify.tolerance", "override for fd-limited checks");
    add(sub, "--seed", "verify.seed", "random seed");
    add(sub, "--out", "output.dir", "output directory");
    for (const char* p : {"I", "a", "mgl", "mass", "gravity", "length", "dim"})
      add(sub, (std::string("--") + p).c_str(), (std::string("params.") + p).c_str(),
          (std::string("system parameter ") + p).c_str());
  }

  Config collect() const {
    Config cfg;
    if (!config.empty()) cfg = load_config_file(config);
    for (const Binding& b : bindings)
      if (b.opt->count() > 0) cfg[b.key] = b.value;
    return cfg;
  }

 private:
  void add(CLI::App* sub, const char* flag, const char* key, const char* help) {
    bindings.emplace_back();
    Binding& b = bindings.back();
    b.key = key;
    b.opt = sub->add_option(flag, b.value, help);
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mechanics on duals of vector bundles: simulate, verify, compare"};
  app.require_subcommand(1);

  CLI::App* sim = app.add_subcommand("simulate", "integrate the mechanical flow, write CSV");
  CLI::App* ver = app.add_subcommand("verify", "run the invariant sweep, write a JSON report");
  CLI::App* rep = app.add_subcommand(
      "reparam-check", "compare the mechanical flow with the reparametrized kinetic flow");
  CLI::App* bt = app.add_subcommand("bracket-table", "coordinate brackets at a point");

  CommonFlags fsim, fver, frep, fbt;
  fsim.bind(sim);
  fver.bind(ver);
  frep.bind(rep);
  fbt.bind(bt);
  bool bt_json = false;
  bt->add_flag("--json", bt_json, "emit the table as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) return cmd_simulate([&] { auto c = fsim.collect(); validate_keys(c); return c; }());
    if (ver->parsed()) return cmd_verify([&] { auto c = fver.collect(); validate_keys(c); return c; }());
    if (rep->parsed()) return cmd_reparam_check([&] { auto c = frep.collect(); validate_keys(c); return c; }());
    if (bt->parsed()) return cmd_bracket_table([&] { auto c = fbt.collect(); validate_keys(c); return c; }(), bt_json);
  } catch (const maup::DomainError& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 2;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 2;
  }
  return 2;
}
