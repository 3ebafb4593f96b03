#include "cli_app.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "gwp/gwp.hpp"
#include "gwp/io.hpp"

namespace gwp::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) parts.push_back(item);
  return parts;
}

double parse_real(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw UsageError("not a number: '" + s + "'");
  return v;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  for (const auto& part : split_commas(text)) {
    char* end = nullptr;
    const long v = std::strtol(part.c_str(), &end, 10);
    if (part.empty() || end != part.c_str() + part.size()) {
      throw UsageError("not an integer: '" + part + "'");
    }
    out.push_back(static_cast<int>(v));
  }
  return out;
}

// Splits "2.5e-3" into ("2.5", -3).
std::pair<std::string, int> split_exponent(const std::string& s) {
  const auto pos = s.find_first_of("eE");
  if (pos == std::string::npos) return {s, 0};
  return {s.substr(0, pos), static_cast<int>(parse_real(s.substr(pos + 1)))};
}

}  // namespace

std::vector<double> parse_real_list(const std::string& text) {
  const auto range = text.find("..");
  if (range == std::string::npos) {
    std::vector<double> out;
    for (const auto& part : split_commas(text)) out.push_back(parse_real(part));
    if (out.empty()) throw UsageError("empty list");
    return out;
  }
  // Decade range: same mantissa at both ends, exponent stepping by one.
  const std::string from = text.substr(0, range);
  const std::string to = text.substr(range + 2);
  const auto [m_from, e_from] = split_exponent(from);
  const auto [m_to, e_to] = split_exponent(to);
  if (parse_real(m_from) != parse_real(m_to)) {
    throw UsageError("decade range ends must share a mantissa: '" + text + "'");
  }
  std::vector<double> out;
  const int step = e_to >= e_from ? 1 : -1;
  for (int e = e_from;; e += step) {
    out.push_back(parse_real(m_from + "e" + std::to_string(e)));
    if (e == e_to) break;
  }
  return out;
}

namespace {

struct Raw {
  double a = 0, k = 0, rho = 0, c = 0, lambda = 0, volume = 0, p0 = 0, density = 1.0;
  std::string window, cells, resolution, k_list, c_list, volumes;
  std::int64_t max_n = 0;
  int marks = 1;
  std::uint64_t seed = 0;
  std::size_t replicates = 1;
  std::string backend = "cox", out, format = "csv", input;
};

bool given(CLI::App* leaf, const std::string& name) {
  const CLI::Option* opt = leaf->get_option_no_throw(name);
  return opt != nullptr && opt->count() > 0;
}

void require_positive(const std::optional<double>& v, const char* name) {
  if (v && !(*v > 0.0 && std::isfinite(*v))) {
    throw ValidationError(std::string(name) + " must be positive");
  }
}

void validate(const RunConfig& c) {
  require_positive(c.a, "--a");
  require_positive(c.k, "--k");
  require_positive(c.rho, "--rho");
  require_positive(c.c, "--c");
  require_positive(c.volume, "--volume");
  if (c.lambda && !(*c.lambda >= 0.0)) throw ValidationError("--lambda must be nonnegative");
  if (c.p0 && !(*c.p0 > 0.0 && *c.p0 <= 1.0)) throw ValidationError("--p0 must lie in (0, 1]");
  if (!(c.density > 0.0)) throw ValidationError("--density must be positive");
  if (c.replicates < 1) throw ValidationError("--replicates must be at least 1");
  if (c.marks < 1) throw ValidationError("--marks must be at least 1");
  if (c.max_n && *c.max_n < 0) throw ValidationError("--max-n must be nonnegative");
  for (int n : c.cells) {
    if (n < 1) throw ValidationError("--cells entries must be positive");
  }
  for (int n : c.resolution) {
    if (n < 1) throw ValidationError("--resolution entries must be positive");
  }
  if (!c.window.empty()) {
    if (c.window.size() % 2 != 0 || c.window.size() > 6) {
      throw ValidationError("--window needs lower and upper corners (2, 4 or 6 numbers)");
    }
    const std::size_t d = c.window.size() / 2;
    for (std::size_t i = 0; i < d; ++i) {
      if (!(c.window[i] < c.window[d + i])) throw ValidationError("--window lower must be below upper");
    }
    if (!c.cells.empty() && c.cells.size() != d) throw ValidationError("--cells must match the window dimension");
    if (!c.resolution.empty() && c.resolution.size() != d) {
      throw ValidationError("--resolution must match the window dimension");
    }
  }
  for (double v : c.volumes) {
    if (!(v > 0.0)) throw ValidationError("--volumes must be positive");
  }
  for (const auto* list : {&c.k_values, &c.c_values}) {
    for (std::size_t i = 0; i < list->size(); ++i) {
      if (!((*list)[i] > 0.0) || (i > 0 && !((*list)[i] > (*list)[i - 1]))) {
        throw ValidationError("parameter lists must be positive and increasing");
      }
    }
  }
  if (c.command == "diagnose" && c.action == "ergodicity") {
    if (c.replicates < 100) throw ValidationError("ergodicity needs --replicates >= 100");
    for (std::size_t i = 1; i < c.volumes.size(); ++i) {
      if (!(c.volumes[i] > c.volumes[i - 1])) throw ValidationError("--volumes must be increasing");
    }
  }
}

}  // namespace

std::optional<RunConfig> parse_config(const std::vector<std::string>& args, std::ostream& out) {
  CLI::App app{"Generalized Waring distributions and point processes", "gwp"};
  app.require_subcommand(1);
  Raw raw;

  const std::vector<std::string> backends{"cox", "conditional"};
  const std::vector<std::string> formats{"csv", "json"};

  auto add_gwd = [&](CLI::App* s, bool with_k = true) {
    s->add_option("--a", raw.a, "Shape a > 0")->required();
    if (with_k) s->add_option("--k", raw.k, "Shape k > 0 per unit measure")->required();
    s->add_option("--rho", raw.rho, "Tail parameter rho > 0")->required();
  };
  auto add_output = [&](CLI::App* s) {
    s->add_option("--out", raw.out, "Output directory");
    s->add_option("--format", raw.format, "csv or json")->check(CLI::IsMember(formats));
  };
  auto add_seed = [&](CLI::App* s) {
    s->add_option("--seed", raw.seed, "Master seed (64-bit unsigned)");
    s->add_option("--replicates", raw.replicates, "Number of replicates");
  };
  auto add_grid = [&](CLI::App* s) {
    s->add_option("--window", raw.window, "lower...,upper... corners, e.g. 0,0,1,1")->required();
    s->add_option("--cells", raw.cells, "Cells per axis, e.g. 8,8")->required();
    s->add_option("--density", raw.density, "Measure density (default 1)");
  };

  CLI::App* dist = app.add_subcommand("dist", "Univariate GWD evaluation and sampling");
  dist->require_subcommand(1);
  CLI::App* dist_pmf = dist->add_subcommand("pmf", "pmf table");
  add_gwd(dist_pmf);
  dist_pmf->add_option("--max-n", raw.max_n, "Largest n in the table (default: adaptive)");
  add_output(dist_pmf);
  CLI::App* dist_moments = dist->add_subcommand("moments", "Mean, variance and factorial moments");
  add_gwd(dist_moments);
  add_output(dist_moments);
  CLI::App* dist_sample = dist->add_subcommand("sample", "Exact draws");
  add_gwd(dist_sample);
  add_seed(dist_sample);
  add_output(dist_sample);

  CLI::App* process = app.add_subcommand("process", "GW point process on a window");
  process->require_subcommand(1);
  CLI::App* proc_sim = process->add_subcommand("simulate", "Quadrat counts on a grid");
  add_gwd(proc_sim);
  add_grid(proc_sim);
  add_seed(proc_sim);
  proc_sim->add_option("--backend", raw.backend, "cox or conditional")->check(CLI::IsMember(backends));
  add_output(proc_sim);
  CLI::App* proc_points = process->add_subcommand("points", "Point pattern on a fine grid");
  add_gwd(proc_points);
  proc_points->add_option("--window", raw.window, "lower...,upper... corners")->required();
  proc_points->add_option("--resolution", raw.resolution, "Cells per axis (default 64)");
  proc_points->add_option("--density", raw.density, "Measure density (default 1)");
  add_seed(proc_points);
  add_output(proc_points);
  CLI::App* proc_avoid = process->add_subcommand("avoidance", "Avoidance probability or its inverse");
  add_gwd(proc_avoid);
  auto* vol_opt = proc_avoid->add_option("--volume", raw.volume, "Set measure mu(A)");
  auto* p0_opt = proc_avoid->add_option("--p0", raw.p0, "Avoidance probability to invert");
  vol_opt->excludes(p0_opt);
  add_output(proc_avoid);

  CLI::App* marks = app.add_subcommand("marks", "Multivariate (marked) GW process");
  marks->require_subcommand(1);
  CLI::App* marks_sim = marks->add_subcommand("simulate", "Counts per (cell, mark)");
  add_gwd(marks_sim);
  add_grid(marks_sim);
  add_seed(marks_sim);
  marks_sim->add_option("--marks", raw.marks, "Number of marks")->required();
  marks_sim->add_option("--backend", raw.backend, "cox or conditional")->check(CLI::IsMember(backends));
  add_output(marks_sim);

  CLI::App* limits = app.add_subcommand("limits", "Convergence to NB and Poisson limits");
  limits->require_subcommand(1);
  CLI::App* lim_nb = limits->add_subcommand("nb", "TV to the NB limit as k grows with rho = c k");
  lim_nb->add_option("--a", raw.a, "Shape a > 0")->required();
  lim_nb->add_option("--c", raw.c, "rho / k ratio c > 0")->required();
  lim_nb->add_option("--volume", raw.volume, "Set measure mu(A)")->required();
  lim_nb->add_option("--k", raw.k_list, "Increasing k values, e.g. 1,10,100")->required();
  add_output(lim_nb);
  CLI::App* lim_po = limits->add_subcommand("poisson", "TV to the Poisson limit as c grows with a = lambda c");
  lim_po->add_option("--lambda", raw.lambda, "Poisson intensity")->required();
  lim_po->add_option("--volume", raw.volume, "Set measure mu(A)")->required();
  lim_po->add_option("--c", raw.c_list, "Increasing c values")->required();
  add_output(lim_po);

  CLI::App* fit = app.add_subcommand("fit", "Method-of-moments fit of (a, k, rho)");
  fit->add_option("--input", raw.input, "CSV of counts (column 'count' or last column)");
  fit->add_option("--a", raw.a, "Synthetic data: a");
  fit->add_option("--k", raw.k, "Synthetic data: k");
  fit->add_option("--rho", raw.rho, "Synthetic data: rho");
  fit->add_option("--volume", raw.volume, "Set measure of each observation (default 1)");
  add_seed(fit);
  add_output(fit);

  CLI::App* diagnose = app.add_subcommand("diagnose", "Orderliness and ergodicity diagnostics");
  diagnose->require_subcommand(1);
  CLI::App* diag_order = diagnose->add_subcommand("orderliness", "P(N>1)/P(N>0) on shrinking sets");
  add_gwd(diag_order);
  diag_order->add_option("--volumes", raw.volumes, "Volumes, list or decade range 1e-1..1e-8")->required();
  add_output(diag_order);
  CLI::App* diag_erg = diagnose->add_subcommand("ergodicity", "Spatial averages on growing windows");
  add_gwd(diag_erg);
  diag_erg->add_option("--volumes", raw.volumes, "Increasing window volumes")->required();
  add_seed(diag_erg);
  add_output(diag_erg);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return std::nullopt;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return std::nullopt;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  RunConfig cfg;
  cfg.argv = args;
  CLI::App* leaf = nullptr;
  for (CLI::App* top : app.get_subcommands()) {
    cfg.command = top->get_name();
    leaf = top;
    const auto subs = top->get_subcommands();
    if (!subs.empty()) {
      leaf = subs.front();
      cfg.action = leaf->get_name();
    }
  }
  if (cfg.command == "fit" && raw.input.empty() && !(given(leaf, "--a") && given(leaf, "--k") && given(leaf, "--rho"))) {
    throw UsageError("fit needs --input or all of --a --k --rho for synthetic data");
  }

  if (given(leaf, "--a")) cfg.a = raw.a;
  if (given(leaf, "--rho")) cfg.rho = raw.rho;
  if (given(leaf, "--volume")) cfg.volume = raw.volume;
  if (given(leaf, "--p0")) cfg.p0 = raw.p0;
  if (given(leaf, "--lambda")) cfg.lambda = raw.lambda;
  if (given(leaf, "--max-n")) cfg.max_n = raw.max_n;
  if (cfg.command == "limits") {
    if (cfg.action == "nb") {
      cfg.c = raw.c;
      cfg.k_values = parse_real_list(raw.k_list);
    } else {
      cfg.c_values = parse_real_list(raw.c_list);
    }
  } else if (given(leaf, "--k")) {
    cfg.k = raw.k;
  }
  if (!raw.window.empty()) cfg.window = parse_real_list(raw.window);
  if (!raw.cells.empty()) cfg.cells = parse_int_list(raw.cells);
  if (!raw.resolution.empty()) cfg.resolution = parse_int_list(raw.resolution);
  if (!raw.volumes.empty()) cfg.volumes = parse_real_list(raw.volumes);
  cfg.density = raw.density;
  cfg.marks = raw.marks;
  cfg.seed = raw.seed;
  cfg.replicates = raw.replicates;
  cfg.backend = raw.backend;
  cfg.out = raw.out;
  cfg.format = raw.format;
  cfg.input = raw.input;
  if (cfg.command == "process" && cfg.action == "points" && cfg.resolution.empty() && !cfg.window.empty()) {
    cfg.resolution.assign(cfg.window.size() / 2, 64);
  }
  if (cfg.command == "fit" && !cfg.volume) cfg.volume = 1.0;

  validate(cfg);
  return cfg;
}

// ---------------------------------------------------------------------------

namespace {

json run_metadata(const RunConfig& c) {
  json j;
  j["schema_version"] = io::kSchemaVersion;
  j["tool"] = "gwp";
  j["command"] = c.command;
  if (!c.action.empty()) j["action"] = c.action;
  j["argv"] = c.argv;
  j["seed"] = c.seed;
  j["replicates"] = c.replicates;
  return j;
}

/// Writes named outputs either under the output directory or, for the
/// primary table without --out, to the given stream.
class Sink {
 public:
  Sink(const RunConfig& c, std::ostream& out) : cfg_(c), out_(out) {
    if (!c.out.empty()) {
      std::error_code ec;
      fs::create_directories(c.out, ec);
      if (ec) throw IoError("cannot create output directory '" + c.out + "': " + ec.message());
    }
  }

  [[nodiscard]] bool to_files() const { return !cfg_.out.empty(); }

  void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
    if (!to_files()) {
      body(out_);
      out_.flush();
      return;
    }
    const fs::path path = fs::path(cfg_.out) / name;
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
    body(f);
    f.flush();
    if (!f) throw IoError("write failed for '" + path.string() + "'");
  }

  /// Table in the configured format, plus a metadata sidecar when writing files.
  void table(const std::string& stem, const std::function<void(std::ostream&)>& csv, const json& as_json,
             const json& meta) {
    if (cfg_.format == "json") {
      json doc = meta;
      doc["data"] = as_json;
      write(stem + ".json", [&](std::ostream& os) { os << doc.dump(2) << '\n'; });
      return;
    }
    write(stem + ".csv", csv);
    if (to_files()) {
      write(stem + ".json", [&](std::ostream& os) { os << meta.dump(2) << '\n'; });
    }
  }

 private:
  const RunConfig& cfg_;
  std::ostream& out_;
};

GwdParams gwd_params(const RunConfig& c) { return GwdParams(*c.a, *c.k, *c.rho); }

QuadratGrid make_grid(const RunConfig& c, const std::vector<int>& cells) {
  const std::size_t d = c.window.size() / 2;
  std::vector<double> lower(c.window.begin(), c.window.begin() + static_cast<std::ptrdiff_t>(d));
  std::vector<double> upper(c.window.begin() + static_cast<std::ptrdiff_t>(d), c.window.end());
  return QuadratGrid(Window(std::move(lower), std::move(upper), c.density), cells);
}

Backend backend_of(const RunConfig& c) {
  const auto b = parse_backend(c.backend);
  if (!b) throw ValidationError("unknown backend '" + c.backend + "'");
  return *b;
}

std::string replicate_stem(const std::string& base, const RunConfig& c, std::size_t r) {
  if (c.replicates == 1) return base;
  std::ostringstream ss;
  ss << base << '_' << r;
  return ss.str();
}

void run_dist(const RunConfig& c, Sink& sink) {
  const GwdParams p = gwd_params(c);
  json meta = run_metadata(c);
  meta["params"] = io::to_json(p);
  if (c.action == "pmf") {
    const std::int64_t max_n = c.max_n ? *c.max_n : ugwd_support_bound(p, 1e-9, 1'000'000);
    const PmfTable t = ugwd_pmf_table(p, static_cast<std::size_t>(max_n));
    meta["tail_mass"] = t.tail;
    sink.table("pmf", [&](std::ostream& os) { io::write_pmf_csv(os, t); }, io::to_json(t), meta);
  } else if (c.action == "moments") {
    std::vector<std::pair<std::string, double>> rows;
    for (int r = 1; r < p.rho && r <= 6; ++r) {
      rows.emplace_back("factorial" + std::to_string(r), ugwd_factorial_moment(p, r));
    }
    if (p.rho > 1.0) rows.insert(rows.begin(), {"mean", ugwd_mean(p)});
    if (p.rho > 2.0) rows.insert(rows.begin() + 1, {"variance", ugwd_variance(p)});
    if (rows.empty()) throw InfiniteMomentError("every moment is infinite for rho <= 1");
    json j = json::object();
    for (const auto& [name, v] : rows) j[name] = v;
    sink.table(
        "moments",
        [&](std::ostream& os) {
          os << "quantity,value\n";
          for (const auto& [name, v] : rows) os << name << ',' << io::format_double(v) << '\n';
        },
        j, meta);
  } else {
    std::vector<std::int64_t> draws(c.replicates);
    for (std::size_t r = 0; r < c.replicates; ++r) {
      Rng rng = make_stream(c.seed, r);
      draws[r] = sample_ugwd(p, rng);
    }
    sink.table(
        "sample",
        [&](std::ostream& os) {
          os << "replicate,count\n";
          for (std::size_t r = 0; r < draws.size(); ++r) os << r << ',' << draws[r] << '\n';
        },
        json(draws), meta);
  }
}

void run_process(const RunConfig& c, Sink& sink, std::ostream& out) {
  const GwdParams p = gwd_params(c);
  if (c.action == "avoidance") {
    json meta = run_metadata(c);
    meta["params"] = io::to_json(p);
    json result;
    if (c.p0) {
      result = {{"p0", *c.p0}, {"volume", avoidance_volume(p, *c.p0)}};
    } else {
      if (!c.volume) throw UsageError("avoidance needs --volume or --p0");
      result = {{"volume", *c.volume}, {"p0", avoidance_probability(p, *c.volume)}};
    }
    sink.table(
        "avoidance",
        [&](std::ostream& os) {
          os << "volume,p0\n"
             << io::format_double(result["volume"].get<double>()) << ','
             << io::format_double(result["p0"].get<double>()) << '\n';
        },
        result, meta);
    return;
  }

  // Count fields always go to files; default to the working directory.
  RunConfig file_cfg = c;
  if (file_cfg.out.empty()) file_cfg.out = ".";
  Sink files(file_cfg, out);

  if (c.action == "points") {
    const std::size_t d = c.window.size() / 2;
    Window w(std::vector<double>(c.window.begin(), c.window.begin() + static_cast<std::ptrdiff_t>(d)),
             std::vector<double>(c.window.begin() + static_cast<std::ptrdiff_t>(d), c.window.end()), c.density);
    for (std::size_t r = 0; r < c.replicates; ++r) {
      Rng rng = make_stream(c.seed, r);
      const PointPattern pattern = simulate_points(p, w, c.resolution, rng);
      json meta = run_metadata(c);
      meta["params"] = io::to_json(p);
      meta["window"] = io::to_json(w);
      meta["resolution"] = c.resolution;
      meta["replicate"] = r;
      meta["num_points"] = pattern.points.size();
      const std::string stem = replicate_stem("points", c, r);
      files.write(stem + ".csv", [&](std::ostream& os) { io::write_points_csv(os, pattern); });
      files.write(stem + ".json", [&](std::ostream& os) { os << meta.dump(2) << '\n'; });
    }
    return;
  }

  const QuadratGrid grid = make_grid(c, c.cells);
  const Backend backend = backend_of(c);
  for (std::size_t r = 0; r < c.replicates; ++r) {
    Rng rng = make_stream(c.seed, r);
    CountField field = simulate_counts(p, grid, backend, rng);
    field.meta.seed = c.seed;
    json meta = io::metadata(field);
    meta["run"] = run_metadata(c);
    meta["replicate"] = r;
    const std::string stem = replicate_stem("counts", c, r);
    if (c.format == "json") {
      json doc = meta;
      doc["counts"] = field.counts;
      files.write(stem + ".json", [&](std::ostream& os) { os << doc.dump(2) << '\n'; });
    } else {
      files.write(stem + ".csv", [&](std::ostream& os) { io::write_count_field_csv(os, field); });
      files.write(stem + ".json", [&](std::ostream& os) { os << meta.dump(2) << '\n'; });
    }
  }
}

void run_marks(const RunConfig& c, std::ostream& out) {
  const GwdParams p = gwd_params(c);
  RunConfig file_cfg = c;
  if (file_cfg.out.empty()) file_cfg.out = ".";
  Sink files(file_cfg, out);
  const MarkedGrid mg(make_grid(c, c.cells), c.marks);
  const Backend backend = backend_of(c);
  for (std::size_t r = 0; r < c.replicates; ++r) {
    Rng rng = make_stream(c.seed, r);
    MarkedCountField field = simulate_marked_counts(p, mg, backend, rng);
    field.meta.seed = c.seed;
    json meta = io::metadata(field);
    meta["run"] = run_metadata(c);
    meta["replicate"] = r;
    const std::string stem = replicate_stem("marked_counts", c, r);
    if (c.format == "json") {
      json doc = meta;
      doc["counts"] = field.counts;
      files.write(stem + ".json", [&](std::ostream& os) { os << doc.dump(2) << '\n'; });
    } else {
      files.write(stem + ".csv", [&](std::ostream& os) { io::write_marked_field_csv(os, field); });
      files.write(stem + ".json", [&](std::ostream& os) { os << meta.dump(2) << '\n'; });
    }
  }
}

void run_limits(const RunConfig& c, Sink& sink) {
  json meta = run_metadata(c);
  std::vector<LimitPoint> rows;
  if (c.action == "nb") {
    meta["a"] = *c.a;
    meta["c"] = *c.c;
    meta["volume"] = *c.volume;
    rows = nb_limit_curve(*c.a, *c.c, *c.volume, c.k_values);
  } else {
    meta["lambda"] = *c.lambda;
    meta["volume"] = *c.volume;
    rows = poisson_limit_curve(*c.lambda, *c.volume, c.c_values);
  }
  sink.table("limits_" + c.action, [&](std::ostream& os) { io::write_limit_csv(os, rows); },
             io::to_json(rows), meta);
}

void run_fit(const RunConfig& c, Sink& sink) {
  json meta = run_metadata(c);
  std::vector<std::int64_t> counts;
  if (!c.input.empty()) {
    std::ifstream in(c.input, std::ios::binary);
    if (!in) throw IoError("cannot open input '" + c.input + "'");
    counts = io::read_counts_csv(in);
    meta["input"] = c.input;
  } else {
    const GwdParams p = gwd_params(c).with_shape(*c.k * *c.volume);
    meta["synthetic_params"] = io::to_json(gwd_params(c));
    counts.resize(c.replicates);
    for (std::size_t r = 0; r < c.replicates; ++r) {
      Rng rng = make_stream(c.seed, r);
      counts[r] = sample_ugwd(p, rng);
    }
  }
  const FitResult fit = fit_moments(counts, *c.volume);
  json doc = meta;
  doc["fit"] = io::to_json(fit);
  sink.write("fit.json", [&](std::ostream& os) { os << doc.dump(2) << '\n'; });
}

void run_diagnose(const RunConfig& c, Sink& sink) {
  const GwdParams p = gwd_params(c);
  json meta = run_metadata(c);
  meta["params"] = io::to_json(p);
  if (c.action == "orderliness") {
    const auto rows = orderliness_table(p, c.volumes);
    sink.table("orderliness", [&](std::ostream& os) { io::write_orderliness_csv(os, rows); },
               io::to_json(rows), meta);
  } else {
    const auto rows = ergodicity_diagnostic(p, c.volumes, c.replicates, c.seed);
    sink.table("ergodicity", [&](std::ostream& os) { io::write_ergodicity_csv(os, rows); },
               io::to_json(rows), meta);
  }
}

void write_error_report(const RunConfig& c, std::ostream& out, const std::string& type,
                        const std::string& message) {
  json doc = run_metadata(c);
  doc["error"] = {{"type", type}, {"message", message}};
  if (!c.out.empty()) {
    std::ofstream f(fs::path(c.out) / "error.json", std::ios::binary | std::ios::trunc);
    if (f) {
      f << doc.dump(2) << '\n';
      return;
    }
  }
  out << doc.dump(2) << '\n';
}

std::string error_type(const gwp::Error& e) {
  if (dynamic_cast<const InfiniteMomentError*>(&e)) return "infinite_moment";
  if (dynamic_cast<const ConvergenceError*>(&e)) return "convergence";
  if (dynamic_cast<const QuantileOverflowError*>(&e)) return "quantile_overflow";
  if (dynamic_cast<const InsufficientSampleError*>(&e)) return "insufficient_sample";
  if (dynamic_cast<const DomainError*>(&e)) return "domain";
  return "error";
}

}  // namespace

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    Sink sink(config, out);
    if (config.command == "dist") {
      run_dist(config, sink);
    } else if (config.command == "process") {
      run_process(config, sink, out);
    } else if (config.command == "marks") {
      run_marks(config, out);
    } else if (config.command == "limits") {
      run_limits(config, sink);
    } else if (config.command == "fit") {
      run_fit(config, sink);
    } else if (config.command == "diagnose") {
      run_diagnose(config, sink);
    } else {
      err << "unknown command '" << config.command << "'\n";
      return kUsageError;
    }
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIoError;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << '\n';
    return kValidationError;
  } catch (const gwp::Error& e) {
    write_error_report(config, out, error_type(e), e.what());
    err << "error: " << e.what() << '\n';
    return kOperationError;
  }
  return kOk;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::optional<RunConfig> cfg;
  try {
    cfg = parse_config(args, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\nRun with --help for usage.\n";
    return kUsageError;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << '\n';
    return kValidationError;
  } catch (const gwp::Error& e) {
    err << "validation error: " << e.what() << '\n';
    return kValidationError;
  }
  if (!cfg) return kOk;
  return run(*cfg, out, err);
}

}  // namespace gwp::cli
