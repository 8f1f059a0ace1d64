#include "nitsche/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "nitsche/format.hpp"

namespace nitsche::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{"problem",     "dim",  "order",      "levels",     "coarse_cells",
                                          "diagnostics", "seed", "newton_tol", "linear_tol", "output_dir"};
  return keys;
}

int int_field(const json& j, const std::string& key, int lo, int hi) {
  const json& v = j.at(key);
  if (!v.is_number_integer()) throw ConfigError("'" + key + "' must be an integer");
  const auto x = v.get<std::int64_t>();
  if (x < lo || x > hi) {
    throw ConfigError("'" + key + "' must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  return static_cast<int>(x);
}

double tol_field(const json& j, const std::string& key) {
  const json& v = j.at(key);
  if (!v.is_number()) throw ConfigError("'" + key + "' must be a number");
  const double x = v.get<double>();
  if (!(x > 0.0 && x < 1.0)) throw ConfigError("'" + key + "' must lie in (0, 1)");
  return x;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << content;
  if (!f) throw Error("write failed for " + path.string());
}

std::string slope(double h0, double e0, double h1, double e1) {
  if (!(e0 > 0.0 && e1 > 0.0)) return "";
  return format_double(std::log(e1 / e0) / std::log(h1 / h0));
}

}  // namespace

StudyConfig parse_config(const std::string& text, const fs::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known_keys().count(key)) throw ConfigError("unknown key '" + key + "'");
  }
  for (const char* key : {"problem", "dim", "order", "levels"}) {
    if (!j.contains(key)) throw ConfigError(std::string("missing required key '") + key + "'");
  }

  StudyConfig c;
  if (!j["problem"].is_string()) throw ConfigError("'problem' must be a string");
  c.problem = j["problem"].get<std::string>();
  const auto& names = problem_names();
  if (std::find(names.begin(), names.end(), c.problem) == names.end()) {
    throw ConfigError("unknown problem '" + c.problem + "'");
  }
  c.dim = int_field(j, "dim", 1, 2);
  c.order = int_field(j, "order", 1, 3);
  c.levels = int_field(j, "levels", 3, 12);
  if (j.contains("coarse_cells")) c.coarse_cells = int_field(j, "coarse_cells", 1, 4096);
  if (j.contains("seed")) {
    const json& v = j["seed"];
    if (!v.is_number_unsigned()) throw ConfigError("'seed' must be a non-negative integer");
    c.seed = v.get<std::uint64_t>();
  }
  if (j.contains("newton_tol")) c.newton_tol = tol_field(j, "newton_tol");
  if (j.contains("linear_tol")) c.linear_tol = tol_field(j, "linear_tol");
  if (j.contains("diagnostics")) {
    const json& v = j["diagnostics"];
    if (!v.is_array()) throw ConfigError("'diagnostics' must be an array of names");
    for (const json& d : v) {
      if (!d.is_string()) throw ConfigError("'diagnostics' entries must be strings");
      Diagnostic diag;
      try {
        diag = diagnostic_from_string(d.get<std::string>());
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
      if (std::find(c.diagnostics.begin(), c.diagnostics.end(), diag) != c.diagnostics.end()) {
        throw ConfigError("diagnostic '" + d.get<std::string>() + "' listed twice");
      }
      c.diagnostics.push_back(diag);
    }
  }
  c.output_dir = base_dir;
  if (j.contains("output_dir")) {
    if (!j["output_dir"].is_string()) throw ConfigError("'output_dir' must be a string");
    const fs::path p = j["output_dir"].get<std::string>();
    c.output_dir = p.is_absolute() ? p : base_dir / p;
  }
  return c;
}

StudyConfig load_config(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read config " + path.string());
  std::ostringstream text;
  text << f.rdbuf();
  fs::path base = path.parent_path();
  if (base.empty()) base = ".";
  return parse_config(text.str(), base);
}

StudyOptions study_options(const StudyConfig& config) {
  StudyOptions o;
  o.coarse_cells = config.coarse_cells;
  o.diagnostics = config.diagnostics;
  o.seed = config.seed;
  o.newton.residual_tol = config.newton_tol;
  o.newton.linear_tol = config.linear_tol;
  return o;
}

std::string rates_csv(const ConvergenceReport& report) {
  std::ostringstream s;
  s << "level,h,dofs,err_l2,err_h1,slope_l2_running,slope_h1_running,newton_iters\n";
  for (std::size_t i = 0; i < report.levels.size(); ++i) {
    const LevelResult& lv = report.levels[i];
    std::string sl2, sh1;
    if (i > 0) {
      const LevelResult& prev = report.levels[i - 1];
      sl2 = slope(prev.h, prev.error.l2, lv.h, lv.error.l2);
      sh1 = slope(prev.h, h1_error(prev.error), lv.h, h1_error(lv.error));
    }
    s << lv.level << ',' << format_double(lv.h) << ',' << lv.dofs << ',' << format_double(lv.error.l2) << ','
      << format_double(h1_error(lv.error)) << ',' << sl2 << ',' << sh1 << ',' << lv.newton_iters << '\n';
  }
  return s.str();
}

std::string diagnostics_csv(const ConvergenceReport& report) {
  std::ostringstream s;
  s << "level,name,value\n";
  for (const LevelResult& lv : report.levels) {
    for (const auto& [name, value] : lv.diagnostics) s << lv.level << ',' << name << ',' << format_double(value) << '\n';
  }
  return s.str();
}

std::string report_text(const ConvergenceReport& report, const std::vector<CheckResult>& checks) {
  std::ostringstream s;
  s << "problem         " << report.problem << '\n'
    << "dimension       " << report.dim << '\n'
    << "order m         " << report.order << '\n'
    << "classification  " << to_string(report.classification) << '\n'
    << "levels          " << report.levels.size() << "\n\n";
  s << "level  h            dofs     L2 error       H1 error       newton  ||u_h||_W1q\n";
  for (const LevelResult& lv : report.levels) {
    char line[160];
    std::snprintf(line, sizeof line, "%-6d %-12.6g %-8d %-14.6e %-14.6e %-7d %.6g\n", lv.level, lv.h, lv.dofs,
                  lv.error.l2, h1_error(lv.error), lv.newton_iters, lv.uh_w1q);
    s << line;
  }
  if (report.levels.size() >= 3 && report.h1_rate.levels.size() >= 3) {
    s << "\nfitted H1 slope " << format_double(report.h1_rate.slope) << " (expected " << report.order
      << "), r^2 " << format_double(report.h1_rate.r_squared) << '\n';
    s << "fitted L2 slope " << format_double(report.l2_rate.slope) << " (expected " << report.order + 1
      << "), r^2 " << format_double(report.l2_rate.r_squared) << '\n';
    for (const auto& w : report.l2_rate.warnings) s << "warning: " << w << '\n';
    for (const auto& w : report.h1_rate.warnings) s << "warning: " << w << '\n';
  }
  s << "\nchecks\n";
  bool all = true;
  for (const CheckResult& c : checks) {
    const char* tag = c.passed ? "PASS" : (c.gating ? "FAIL" : "INFO");
    if (c.gating && !c.passed) all = false;
    s << "  " << tag << "  " << c.name << ": " << c.detail << '\n';
  }
  s << "\nverdict: " << (report.failed ? "solver failure" : all ? "pass" : "fail") << '\n';
  return s.str();
}

int run(const fs::path& config_path, std::ostream& out, std::ostream& err) {
  StudyConfig config;
  try {
    config = load_config(config_path);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return config_error;
  }

  const StudyOptions opts = study_options(config);
  ConvergenceReport report;
  try {
    report = convergence_study(make_problem(config.problem, config.dim), config.order, config.levels, opts);
  } catch (const SolverError& e) {
    err << "solver failure: " << e.what() << '\n';
    return solver_failure;
  }
  const std::vector<CheckResult> checks = evaluate_checks(report, opts);

  try {
    fs::create_directories(config.output_dir);
    write_file(config.output_dir / "rates.csv", rates_csv(report));
    write_file(config.output_dir / "diagnostics.csv", diagnostics_csv(report));
    write_file(config.output_dir / "report.txt", report_text(report, checks));
  } catch (const std::exception& e) {
    err << "output error: " << e.what() << '\n';
    return config_error;
  }

  out << report_text(report, checks);
  if (report.failed) {
    err << "solver failure: " << report.failure << '\n';
    return solver_failure;
  }
  const bool passed =
      std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed || !c.gating; });
  return passed ? ok : check_failed;
}

std::string list_problems() {
  std::ostringstream s;
  for (const std::string& name : problem_names()) {
    const ManufacturedProblem p = make_problem(name, 2);
    s << name << "  L = " << p.model->description() << "  EL: " << p.equation << "  "
      << to_string(classify(*p.model, 2)) << '\n';
  }
  return s.str();
}

namespace {

struct RateRow {
  double h, l2, h1;
};

std::vector<RateRow> read_rates(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read " + path.string());
  std::string line;
  if (!std::getline(f, line) || line.rfind("level,h,dofs,err_l2,err_h1", 0) != 0) {
    throw ConfigError(path.string() + " is not a rates table");
  }
  std::vector<RateRow> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cols.push_back(c);
    if (cols.size() < 5) throw ConfigError("short row in " + path.string());
    try {
      rows.push_back({std::stod(cols[1]), std::stod(cols[3]), std::stod(cols[4])});
    } catch (const std::exception&) {
      throw ConfigError("unparsable number in " + path.string());
    }
  }
  if (rows.size() < 3) throw ConfigError(path.string() + " needs at least three levels");
  return rows;
}

}  // namespace

int plot(const fs::path& rates_path, std::optional<int> order, std::ostream& out, std::ostream& err) {
  std::vector<RateRow> rows;
  int m = 0;
  try {
    rows = read_rates(rates_path);
    if (order) {
      m = *order;
    } else {
      std::vector<std::pair<double, double>> h1;
      for (const auto& r : rows) h1.emplace_back(r.h, r.h1);
      m = static_cast<int>(std::lround(estimate_rate(h1).slope));
    }
  } catch (const std::exception& e) {
    err << "plot: " << e.what() << '\n';
    return config_error;
  }
  if (m < 1) {
    err << "plot: could not infer the element order; pass --order\n";
    return config_error;
  }

  fs::path dir = rates_path.parent_path();
  if (dir.empty()) dir = ".";
  std::ostringstream l2, h1;
  for (const auto& r : rows) {
    l2 << format_double(r.h) << ' ' << format_double(r.l2) << '\n';
    h1 << format_double(r.h) << ' ' << format_double(r.h1) << '\n';
  }
  const RateRow& c = rows.front();
  std::ostringstream gp;
  gp << "set terminal png size 800,600\n"
     << "set output \"rates.png\"\n"
     << "set logscale xy\n"
     << "set xlabel \"h\"\n"
     << "set ylabel \"error\"\n"
     << "set key left top\n"
     << "m = " << m << '\n'
     << "h0 = " << format_double(c.h) << '\n'
     << "e_l2 = " << format_double(c.l2) << '\n'
     << "e_h1 = " << format_double(c.h1) << '\n'
     << "plot \"l2.dat\" using 1:2 with linespoints title \"L2 error\", \\\n"
     << "     \"h1.dat\" using 1:2 with linespoints title \"H1 error\", \\\n"
     << "     e_l2 * (x / h0)**(m + 1) with lines dashtype 2 title \"h^" << m + 1 << "\", \\\n"
     << "     e_h1 * (x / h0)**m with lines dashtype 2 title \"h^" << m << "\"\n";
  try {
    write_file(dir / "l2.dat", l2.str());
    write_file(dir / "h1.dat", h1.str());
    write_file(dir / "rates.gp", gp.str());
  } catch (const std::exception& e) {
    err << "plot: " << e.what() << '\n';
    return config_error;
  }
  out << "wrote " << (dir / "l2.dat").string() << ", " << (dir / "h1.dat").string() << ", "
      << (dir / "rates.gp").string() << '\n';
  return ok;
}

}  // namespace nitsche::cli
