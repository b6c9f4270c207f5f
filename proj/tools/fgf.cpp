#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "criteria.hpp"
#include "fgf/kernels.hpp"
#include "fgf/lattice.hpp"
#include "fgf/lgt.hpp"
#include "fgf/sampler.hpp"
#include "fgf/torus.hpp"
#include "fgf/wilson.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fgf;

namespace {

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw InvalidArgument("cannot read " + p.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct Run {
  std::string out = ".";
  std::uint64_t seed = 0;
  int threads = 0;
  std::string format;
  std::vector<std::string> files;

  fs::path path(const std::string& name) const { return fs::path(out) / name; }
  std::string fmt(const std::string& fallback) const { return format.empty() ? fallback : format; }

  void write_text(const std::string& name, const std::string& text) {
    std::ofstream f(path(name), std::ios::binary);
    if (!f) throw InvalidArgument("cannot write " + path(name).string());
    f << text;
    files.push_back(name);
  }

  // csv: one header line and %.17g values; raw: row-major float64 with a JSON sidecar
  void write_table(const std::string& stem, const Table& t, const std::string& format_) {
    if (format_ == "csv") {
      std::ostringstream s;
      for (std::size_t i = 0; i < t.columns.size(); ++i) s << (i ? "," : "") << t.columns[i];
      s << "\n";
      char buf[32];
      for (const auto& r : t.rows) {
        for (std::size_t i = 0; i < r.size(); ++i) {
          std::snprintf(buf, sizeof buf, "%.17g", r[i]);
          s << (i ? "," : "") << buf;
        }
        s << "\n";
      }
      write_text(stem + ".csv", s.str());
      return;
    }
    std::string bytes;
    for (const auto& r : t.rows) bytes.append(reinterpret_cast<const char*>(r.data()), r.size() * sizeof(double));
    write_text(stem + ".bin", bytes);
    json side{{"columns", t.columns}, {"rows", t.rows.size()}, {"dtype", "float64-le"}, {"layout", "row-major"}};
    write_text(stem + ".json", side.dump(2) + "\n");
  }

  // manifest.json: version, command, config, its hash, seeds and output digests
  void write_manifest(const std::string& command, const json& config, const json& seeds) {
    json m;
    m["tool"] = "fgf";
    m["version"] = version();
    m["command"] = command;
    m["config"] = config;
    m["config_hash"] = "fnv1a64:" + hex(fnv1a(config.dump()));
    m["seeds"] = seeds;
    json fl = json::array();
    for (const auto& f : files) {
      const std::string b = slurp(path(f));
      fl.push_back({{"name", f}, {"bytes", b.size()}, {"fnv1a64", hex(fnv1a(b))}});
    }
    m["files"] = fl;
    std::ofstream f(path("manifest.json"), std::ios::binary);
    if (!f) throw InvalidArgument("cannot write manifest");
    f << m.dump(2) << "\n";
  }
};

Point parse_point(const std::vector<double>& v, int n, const char* what) {
  require(static_cast<int>(v.size()) == n, std::string(what) + " needs " + std::to_string(n) + " coordinates");
  return v;
}

void spectrum_csv(Run& run, const TorusSpectrum& a, const std::string& stem) {
  Table t;
  for (int i = 0; i < a.dim(); ++i) t.columns.push_back("alpha" + std::to_string(i));
  t.columns.insert(t.columns.end(), {"component", "entry", "re", "im"});
  for (long long m = 0; m < a.mode_count(); ++m) {
    const Mode md = a.mode(m);
    for (int c = 0; c < a.comps(); ++c)
      for (int e = 0; e < a.entries(); ++e) {
        std::vector<double> r(md.begin(), md.end());
        r.insert(r.end(), {double(c), double(e), a.at(m, c, e).real(), a.at(m, c, e).imag()});
        t.rows.push_back(std::move(r));
      }
  }
  run.write_table(stem, t, "csv");
}

int cmd_sample(Run& run, const std::string& spec_path, std::uint64_t stream) {
  const json cfg = json::parse(slurp(spec_path), nullptr, false);
  require(!cfg.is_discarded(), "spec file is not valid JSON");
  const FieldSpec spec = FieldSpec::from_json(cfg);
  auto fld = sample_field(spec, run.seed, stream);
  const std::string format = run.fmt("raw");
  if (fld.torus) {
    if (format == "csv") {
      spectrum_csv(run, *fld.torus, "field");
    } else {
      write_spectrum(*fld.torus, run.path("field").string());
      run.files.insert(run.files.end(), {"field.json", "field.bin"});
    }
  } else if (format == "csv") {
    write_form_csv(*fld.lattice, run.path("field.csv").string());
    run.files.push_back("field.csv");
  } else {
    write_form(*fld.lattice, run.path("field").string());
    run.files.insert(run.files.end(), {"field.json", "field.bin"});
  }
  run.write_manifest("sample", {{"spec", spec.to_json()}, {"stream", stream}, {"format", format}},
                     {{"seed", run.seed}, {"stream", stream}});
  return 0;
}

int cmd_kernel(Run& run, int n, double s, const std::string& variant, const std::vector<double>& xv,
               const std::vector<double>& yv) {
  const Point x = parse_point(xv, n, "--x"), y = parse_point(yv, n, "--y");
  double r = 0;
  for (int i = 0; i < n; ++i) r += (x[i] - y[i]) * (x[i] - y[i]);
  Table t{{"i", "j", "value"}, {}};
  if (variant == "green") {
    t.rows.push_back({0, 0, green_kernel(s, n, std::sqrt(r))});
  } else {
    require(variant == "closed" || variant == "coclosed", "variant must be closed, coclosed or green");
    auto K = projected_kernel(s, variant == "closed" ? KernelVariant::Closed : KernelVariant::Coclosed, n, x, y);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) t.rows.push_back({double(i), double(j), K[i * n + j]});
  }
  const std::string format = run.fmt("csv");
  run.write_table("kernel", t, format);
  run.write_manifest("kernel", {{"n", n}, {"s", s}, {"variant", variant}, {"x", x}, {"y", y}, {"format", format}},
                     json::object());
  return 0;
}

ComplexPtr loop_box(int n, int side, int slab_M) {
  if (slab_M >= 0) return std::make_shared<const LatticeComplex>(LatticeComplex::slab(n, side, slab_M));
  return std::make_shared<const LatticeComplex>(n, std::vector<int>(n, side));
}

int cmd_wilson(Run& run, int n, int side, int L, int H, double beta, int slab_M) {
  auto cx = loop_box(n, side, slab_M);
  Coord corner{};
  for (int a = 0; a < n; ++a) corner[a] = cx->extents()[a] / 2;
  corner[0] -= L / 2;
  corner[1] -= H / 2;
  auto loop = build_rect_loop(cx, 0, 1, corner, L, H, false);
  const double e = loop_energy(loop);
  Table t{{"L", "H", "area", "perimeter", "energy", "wilson_expectation"},
          {{double(L), double(H), double(loop.area()), double(loop.perimeter()), e, wilson_gaussian_expectation(loop, beta)}}};
  const std::string format = run.fmt("csv");
  run.write_table("wilson", t, format);
  run.write_manifest("wilson", {{"n", n}, {"box", side}, {"L", L}, {"H", H}, {"beta", beta}, {"slab_M", slab_M}, {"format", format}},
                     json::object());
  return 0;
}

int cmd_confine(Run& run, int n, const std::vector<int>& Ls, double beta, int slab_M, double margin) {
  auto scan = confinement_scan(n, slab_M, Ls, beta, margin);
  const std::string format = run.fmt("csv");
  if (format == "csv") {
    run.write_text("confine.csv", scan.csv());
  } else {
    Table t{{"L", "H", "value", "value_per_area", "value_per_perim", "value_per_perim_log_perim"}, {}};
    for (const auto& r : scan.rows) t.rows.push_back({double(r.L), double(r.H), r.value, r.per_area, r.per_perim, r.per_perim_log});
    run.write_table("confine", t, format);
  }
  run.write_manifest("confine", {{"n", n}, {"Ls", Ls}, {"beta", beta}, {"slab_M", slab_M}, {"margin", margin}, {"format", format}},
                     json::object());
  std::cout << scan.column << " variation " << scan.variation_all << " (top half " << scan.variation << ")\n";
  return 0;
}

Curve circle_from(const std::vector<double>& v, int nodes) {
  require(v.size() == 7, "a circle is cx,cy,cz,nx,ny,nz,radius");
  return circle({v[0], v[1], v[2]}, {v[3], v[4], v[5]}, v[6], nodes);
}

int cmd_linking(Run& run, const std::vector<double>& a, const std::vector<double>& b, int nodes) {
  const double lk = gauss_linking(circle_from(a, nodes), circle_from(b, nodes));
  const std::string format = run.fmt("csv");
  run.write_table("linking", Table{{"linking_number"}, {{lk}}}, format);
  run.write_manifest("linking", {{"a", a}, {"b", b}, {"nodes", nodes}, {"format", format}}, json::object());
  std::cout << "linking number " << lk << "\n";
  return 0;
}

int cmd_lgt(Run& run, int n, int side, double beta, int L, int H, const MetropolisOptions& base) {
  require(n == 2 || n == 3, "lgt runs on n = 2 or 3 boxes");
  auto cx = std::make_shared<const LatticeComplex>(n, std::vector<int>(n, side));
  Coord lo{}, hi{};
  for (int a = 0; a < n; ++a) {
    const int ext = a == 0 ? L : a == 1 ? H : 0;
    lo[a] = side / 4;
    hi[a] = side - side / 4 - ext;
  }
  for (int a = 0; a < n; ++a) require(hi[a] >= lo[a], "loop too large for the box");
  auto loops = translated_loops(cx, 0, 1, L, H, lo, hi);
  MetropolisOptions opt = base;
  opt.seed = run.seed;
  auto r = wilson_mc_estimate(cx, beta, loops, opt);
  double gauss = 0;
  for (const auto& l : loops) gauss += wilson_gaussian_expectation(l, beta);
  gauss /= loops.size();
  json summary = r.to_json();
  summary["gaussian"] = gauss;
  summary["loops"] = loops.size();
  if (n == 2) summary["exact"] = u1_exact_2d(beta, L * H);
  Table t{{"value", "stderr", "tau_int", "acceptance", "width", "samples", "gaussian"},
          {{r.value, r.stderr_, r.tau_int, r.acceptance, r.width, double(r.samples), gauss}}};
  const std::string format = run.fmt("csv");
  run.write_table("lgt", t, format);
  run.write_text("lgt_summary.json", summary.dump(2) + "\n");
  run.write_manifest("lgt",
                     {{"n", n}, {"box", side}, {"beta", beta}, {"L", L}, {"H", H}, {"sweeps", opt.sweeps},
                      {"burn_in", opt.burn_in}, {"batches", opt.batches}, {"format", format}},
                     {{"seed", run.seed}});
  std::cout << summary.dump() << "\n";
  return 0;
}

int cmd_selftest(bool quick, const std::vector<int>& only) {
  acceptance::Options opt;
  opt.quick = quick;
  opt.only = only;
  int failed = 0;
  acceptance::run(opt, [&](const acceptance::Result& r) {
    std::cout << acceptance::format(r) << std::endl;
    failed += !r.pass;
  });
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : std::string("all criteria passed")) << std::endl;
  return failed ? 1 : 0;
}

int resolve_threads(int flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("FGF_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    require(end != env && *end == '\0' && v > 0, "FGF_THREADS must be a positive integer");
    return static_cast<int>(v);
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fractional Gaussian fields, lattice forms and Wilson loops"};
  app.require_subcommand(1);
  app.fallthrough();
  Run run;
  int threads_flag = 0;
  app.add_option("--seed", run.seed, "random seed");
  app.add_option("--out", run.out, "output directory");
  app.add_option("--threads", threads_flag, "worker threads (outputs never depend on it)")->check(CLI::PositiveNumber);
  app.add_option("--format", run.format, "output format")->check(CLI::IsMember({"raw", "csv"}));

  std::string spec_path;
  std::uint64_t stream = 0;
  auto* sample = app.add_subcommand("sample", "draw one field sample from a JSON field spec");
  sample->add_option("--spec", spec_path, "field spec JSON")->required();
  sample->add_option("--stream", stream, "independent stream index");

  int n = 3;
  double s = 1.0;
  std::string variant = "closed";
  std::vector<double> x, y;
  auto* kernel = app.add_subcommand("kernel", "projected 1-form covariance kernel K(x, y)");
  kernel->add_option("--n", n, "dimension");
  kernel->add_option("--s", s, "smoothing exponent");
  kernel->add_option("--variant", variant, "closed, coclosed or green");
  kernel->add_option("--x", x, "first point")->delimiter(',')->required();
  kernel->add_option("--y", y, "second point")->delimiter(',')->required();

  int side = 16, L = 2, H = 2, slab_M = -1;
  double beta = 1.0, margin = 3.0;
  auto* wilson = app.add_subcommand("wilson", "Gaussian Wilson loop of an L x H rectangle");
  wilson->add_option("--n", n, "dimension");
  wilson->add_option("--box", side, "box side (in-plane side for slabs)");
  wilson->add_option("--L", L, "loop width");
  wilson->add_option("--H", H, "loop height");
  wilson->add_option("--beta", beta, "inverse temperature");
  wilson->add_option("--slab-M", slab_M, "slab half height (default: full box)");

  std::vector<int> Ls{6, 8, 10, 12};
  auto* confine = app.add_subcommand("confine", "square-loop scan with area and perimeter normalizations");
  confine->add_option("--n", n, "dimension");
  confine->add_option("--Ls", Ls, "loop sides")->delimiter(',');
  confine->add_option("--beta", beta, "inverse temperature");
  confine->add_option("--slab-M", slab_M, "slab half height (default: full box)");
  confine->add_option("--margin", margin, "box side over loop side");

  std::vector<double> ca{0, 0, 0, 0, 0, 1, 1}, cb{1, 0, 0, 0, 1, 0, 1};
  int nodes = 512;
  auto* linking = app.add_subcommand("linking", "Gauss linking integral of two circles");
  linking->add_option("--a", ca, "first circle cx,cy,cz,nx,ny,nz,r")->delimiter(',');
  linking->add_option("--b", cb, "second circle")->delimiter(',');
  linking->add_option("--nodes", nodes, "nodes per circle");

  MetropolisOptions mopt;
  auto* lgt = app.add_subcommand("lgt", "U(1) Metropolis Wilson loop against the Gaussian prediction");
  lgt->add_option("--n", n, "dimension (2 or 3)");
  lgt->add_option("--box", side, "box side");
  lgt->add_option("--beta", beta, "inverse temperature");
  lgt->add_option("--L", L, "loop width");
  lgt->add_option("--H", H, "loop height");
  lgt->add_option("--sweeps", mopt.sweeps, "measured sweeps");
  lgt->add_option("--burn-in", mopt.burn_in, "discarded sweeps");
  lgt->add_option("--batches", mopt.batches, "batches for the error estimate");

  bool quick = false;
  std::vector<int> only;
  auto* selftest = app.add_subcommand("selftest", "run the acceptance criteria");
  selftest->add_flag("--quick", quick, "reduced sample counts");
  selftest->add_option("--only", only, "criterion ids")->check(CLI::Range(1, acceptance::kCriteria));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    run.threads = resolve_threads(threads_flag);
    if (!selftest->parsed()) fs::create_directories(run.out);
    if (sample->parsed()) return cmd_sample(run, spec_path, stream);
    if (kernel->parsed()) return cmd_kernel(run, n, s, variant, x, y);
    if (wilson->parsed()) return cmd_wilson(run, n, side, L, H, beta, slab_M);
    if (confine->parsed()) return cmd_confine(run, n, Ls, beta, slab_M, margin);
    if (linking->parsed()) return cmd_linking(run, ca, cb, nodes);
    if (lgt->parsed()) return cmd_lgt(run, n, side, beta, L, H, mopt);
    return cmd_selftest(quick, only);
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 1;
  }
}
