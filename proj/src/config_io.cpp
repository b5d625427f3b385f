#include "smpc/config_io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "smpc/format.hpp"

namespace smpc {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorKind::ConfigError, what); }

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) config_error("missing key '" + where + "." + key + "'");
  return obj.at(key);
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) config_error("'" + where + "' must be a number");
  return j.get<double>();
}

Mat matrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) config_error("'" + where + "' must be a non-empty array of rows");
  const std::size_t rows = j.size();
  if (!j[0].is_array() || j[0].empty()) config_error("'" + where + "' rows must be non-empty arrays");
  const std::size_t cols = j[0].size();
  Mat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].size() != cols) config_error("'" + where + "' is not rectangular");
    for (std::size_t k = 0; k < cols; ++k)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = number(j[i][k], where);
  }
  return m;
}

Vec vector(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) config_error("'" + where + "' must be a non-empty array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number(j[i], where);
  return v;
}

SymMatrix symmetric(const json& j, const std::string& where) {
  try {
    return SymMatrix(matrix(j, where));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigError) throw;
    config_error("'" + where + "': " + e.what());
  }
}

void expect_shape(const Mat& m, Eigen::Index r, Eigen::Index c, const std::string& where) {
  if (m.rows() != r || m.cols() != c)
    config_error("'" + where + "' must be " + std::to_string(r) + "x" + std::to_string(c) + ", got " +
                 std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

json to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(row);
  }
  return rows;
}

json to_json(const Vec& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    config_error(std::string("malformed JSON: ") + e.what());
  }
  RunConfig cfg;
  DesignConfig& d = cfg.design;

  const json& sys = require(doc, "system", "");
  d.A = matrix(require(sys, "A", "system"), "system.A");
  const Eigen::Index n = d.A.rows();
  expect_shape(d.A, n, n, "system.A");
  d.B = matrix(require(sys, "B", "system"), "system.B");
  if (d.B.rows() != n) config_error("'system.B' must have as many rows as system.A");
  const Eigen::Index m = d.B.cols();
  d.gamma_w = symmetric(require(sys, "Gamma_w", "system"), "system.Gamma_w");
  expect_shape(d.gamma_w.mat(), n, n, "system.Gamma_w");

  const json& con = require(doc, "constraints", "");
  d.state_set.H = matrix(require(con, "H_x", "constraints"), "constraints.H_x");
  d.state_set.h = vector(require(con, "h_x", "constraints"), "constraints.h_x");
  d.input_set.H = matrix(require(con, "H_u", "constraints"), "constraints.H_u");
  d.input_set.h = vector(require(con, "h_u", "constraints"), "constraints.h_u");
  if (d.state_set.H.cols() != n || d.state_set.H.rows() != d.state_set.h.size())
    config_error("'constraints.H_x'/'h_x' do not match the state dimension");
  if (d.input_set.H.cols() != m || d.input_set.H.rows() != d.input_set.h.size())
    config_error("'constraints.H_u'/'h_u' do not match the input dimension");

  const json& des = require(doc, "design", "");
  d.Q = symmetric(require(des, "Q", "design"), "design.Q");
  expect_shape(d.Q.mat(), n, n, "design.Q");
  d.R = symmetric(require(des, "R", "design"), "design.R");
  expect_shape(d.R.mat(), m, m, "design.R");
  d.lambda = number(require(des, "lambda", "design"), "design.lambda");
  d.epsilon = number(require(des, "epsilon", "design"), "design.epsilon");
  if (des.contains("distribution")) {
    if (!des["distribution"].is_string()) config_error("'design.distribution' must be a string");
    try {
      d.dist = parse_distribution(des["distribution"].get<std::string>());
    } catch (const Error& e) {
      config_error(e.what());
    }
  }
  if (des.contains("W_x") && !des["W_x"].is_null()) {
    d.wx_override = symmetric(des["W_x"], "design.W_x");
    expect_shape(d.wx_override->mat(), n, n, "design.W_x");
  }
  if (des.contains("repair_W_x")) {
    if (!des["repair_W_x"].is_boolean()) config_error("'design.repair_W_x' must be a boolean");
    d.repair_wx_override = des["repair_W_x"].get<bool>();
  }
  if (des.contains("mu")) d.mu = number(des["mu"], "design.mu");
  if (des.contains("horizon")) {
    if (!des["horizon"].is_number_integer()) config_error("'design.horizon' must be an integer");
    d.horizon = des["horizon"].get<int>();
  }
  if (des.contains("r_u_hat")) d.r_u_hat = number(des["r_u_hat"], "design.r_u_hat");
  if (!(d.mu > 0)) config_error("'design.mu' must be positive");
  if (d.horizon < 1) config_error("'design.horizon' must be at least 1");

  ExperimentConfig& ex = cfg.experiment;
  ex.x0 = Vec::Zero(n);
  if (doc.contains("experiment")) {
    const json& e = doc["experiment"];
    if (!e.is_object()) config_error("'experiment' must be an object");
    if (e.contains("controller")) {
      const std::string c = e["controller"].is_string() ? e["controller"].get<std::string>() : "";
      if (c == "ms") ex.controller.kind = ControllerSpec::Kind::Ms;
      else if (c == "is") ex.controller.kind = ControllerSpec::Kind::Is;
      else config_error("'experiment.controller' must be \"ms\" or \"is\"");
    }
    if (e.contains("strategy")) {
      if (!e["strategy"].is_string()) config_error("'experiment.strategy' must be a string");
      try {
        ex.controller.strategy = parse_strategy(e["strategy"].get<std::string>());
      } catch (const Error& err) {
        config_error(err.what());
      }
    }
    if (e.contains("x0")) {
      ex.x0 = vector(e["x0"], "experiment.x0");
      if (ex.x0.size() != n) config_error("'experiment.x0' does not match the state dimension");
    }
    auto integer = [&](const char* key, long long lo) -> long long {
      if (!e[key].is_number_integer()) config_error(std::string("'experiment.") + key + "' must be an integer");
      const long long v = e[key].get<long long>();
      if (v < lo) config_error(std::string("'experiment.") + key + "' is too small");
      return v;
    };
    if (e.contains("T")) ex.T = static_cast<int>(integer("T", 1));
    if (e.contains("N_sim")) ex.n_sim = static_cast<int>(integer("N_sim", 1));
    if (e.contains("seed")) {
      if (!e["seed"].is_number_unsigned() && !(e["seed"].is_number_integer() && e["seed"].get<long long>() >= 0))
        config_error("'experiment.seed' must be a non-negative integer");
      ex.seed = e["seed"].get<std::uint64_t>();
    }
    if (e.contains("threads")) ex.threads = static_cast<unsigned>(integer("threads", 0));
  }
  if (doc.contains("output")) {
    const json& o = doc["output"];
    if (o.contains("directory")) {
      if (!o["directory"].is_string()) config_error("'output.directory' must be a string");
      cfg.output.directory = o["directory"].get<std::string>();
    }
    if (o.contains("svg")) {
      if (!o["svg"].is_boolean()) config_error("'output.svg' must be a boolean");
      cfg.output.svg = o["svg"].get<bool>();
    }
  }
  try {
    d.state_set.validate();
    d.input_set.validate();
  } catch (const Error& e) {
    config_error(e.what());
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string emit_config(const RunConfig& cfg) {
  const DesignConfig& d = cfg.design;
  json doc;
  doc["system"] = {{"A", to_json(d.A)}, {"B", to_json(d.B)}, {"Gamma_w", to_json(d.gamma_w.mat())}};
  doc["constraints"] = {{"H_x", to_json(d.state_set.H)},
                        {"h_x", to_json(d.state_set.h)},
                        {"H_u", to_json(d.input_set.H)},
                        {"h_u", to_json(d.input_set.h)}};
  json des = {{"Q", to_json(d.Q.mat())},
              {"R", to_json(d.R.mat())},
              {"lambda", d.lambda},
              {"epsilon", d.epsilon},
              {"distribution", to_string(d.dist)},
              {"repair_W_x", d.repair_wx_override},
              {"mu", d.mu},
              {"horizon", d.horizon},
              {"r_u_hat", d.r_u_hat}};
  if (d.wx_override) des["W_x"] = to_json(d.wx_override->mat());
  doc["design"] = des;
  const ExperimentConfig& e = cfg.experiment;
  doc["experiment"] = {{"controller", e.controller.kind == ControllerSpec::Kind::Is ? "is" : "ms"},
                       {"strategy", to_string(e.controller.strategy)},
                       {"x0", to_json(e.x0)},
                       {"T", e.T},
                       {"N_sim", e.n_sim},
                       {"seed", e.seed},
                       {"threads", e.threads}};
  doc["output"] = {{"directory", cfg.output.directory}, {"svg", cfg.output.svg}};
  return doc.dump(2) + "\n";
}

void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& rec) {
  if (rec.steps.empty()) return;
  const Eigen::Index n = rec.steps.front().x.size();
  const Eigen::Index m = rec.steps.front().u.size();
  os << "k";
  for (Eigen::Index i = 0; i < n; ++i) os << ",x" << i;
  for (Eigen::Index i = 0; i < m; ++i) os << ",u" << i;
  for (Eigen::Index i = 0; i < n; ++i) os << ",w" << i;
  os << ",gamma_x,gamma_u,delta_r,basic_feasible,in_Ex,in_Eu,in_X,in_U\n";
  for (std::size_t k = 0; k < rec.steps.size(); ++k) {
    const StepRecord& s = rec.steps[k];
    os << k;
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << fmt17(s.x(i));
    for (Eigen::Index i = 0; i < m; ++i) os << ',' << fmt17(s.u(i));
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << fmt17(s.w(i));
    os << ',' << fmt17(s.gamma_x) << ',' << fmt17(s.gamma_u) << ',' << fmt17(s.delta_r) << ','
       << s.basic_feasible << ',' << s.in_Ex << ',' << s.in_Eu << ',' << s.in_X << ',' << s.in_U << '\n';
  }
}

void write_diagnostics_csv(std::ostream& os, const TrajectoryRecord& rec) {
  os << "k,rbar_x,rbar_u,tracking_cost,objective,solver_iterations,mode,error\n";
  for (std::size_t k = 0; k < rec.steps.size(); ++k) {
    const StepRecord& s = rec.steps[k];
    std::string err = s.error;
    for (char& c : err)
      if (c == ',' || c == '\n') c = ';';
    os << k << ',' << fmt17(s.rbar_x) << ',' << fmt17(s.rbar_u) << ',' << fmt17(s.tracking_cost) << ','
       << fmt17(s.objective) << ',' << s.solver_iterations << ',' << (s.mode ? to_string(*s.mode) : "ms") << ','
       << err << '\n';
  }
}

void write_summary_csv(std::ostream& os, const McSummary& m) {
  os << "k,f_x,f_u,f_X,f_U\n";
  for (std::size_t k = 0; k < m.f_x.size(); ++k)
    os << k << ',' << fmt17(m.f_x[k]) << ',' << fmt17(m.f_u[k]) << ',' << fmt17(m.f_X[k]) << ','
       << fmt17(m.f_U[k]) << '\n';
}

void write_table1_csv(std::ostream& os, const std::vector<Table1Column>& cols) {
  os << "ell";
  for (const auto& c : cols) {
    const std::string s = to_string(c.strategy);
    os << ",p_x_" << s << ",p_u_" << s << ",f_x_" << s << ",f_u_" << s;
  }
  os << '\n';
  if (cols.empty()) return;
  for (std::size_t i = 0; i < cols.front().rows.size(); ++i) {
    os << cols.front().rows[i].ell;
    for (const auto& c : cols) {
      const Table1Row& r = c.rows[i];
      os << ',' << fmt17(r.p_x) << ',' << fmt17(r.p_u) << ',' << fmt17(r.f_x) << ',' << fmt17(r.f_u);
    }
    os << '\n';
  }
}

void write_costs_csv(std::ostream& os, const std::vector<std::pair<std::string, const McSummary*>>& runs) {
  os << "controller,index,cost\n";
  for (const auto& [name, m] : runs)
    for (std::size_t i = 0; i < m->costs.size(); ++i) os << name << ',' << i << ',' << fmt17(m->costs[i]) << '\n';
}

void write_svg(std::ostream& os, const DesignParams& d, const std::vector<const TrajectoryRecord*>& recs) {
  if (d.n() < 2) return;
  // E_W(r) boundary: r L (cos t, sin t) with L L^T = W restricted to the first two coordinates
  const Mat L = cholesky(SymMatrix(Mat(d.W_x.mat().topLeftCorner(2, 2))));
  std::vector<std::vector<std::pair<double, double>>> ellipses;
  std::vector<std::vector<std::pair<double, double>>> paths;
  double rbar = d.r_x;
  for (const auto* r : recs) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& s : r->steps) pts.emplace_back(s.x(0), s.x(1));
    paths.push_back(std::move(pts));
    if (!r->steps.empty()) rbar = std::max(rbar, r->steps.front().rbar_x);
  }
  for (int l = 1; l <= d.horizon; ++l) {
    const double rad = rbar - prs_radius(d.rho, d.lambda, l);
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i <= 96; ++i) {
      const double t = 2.0 * M_PI * i / 96.0;
      Vec c(2);
      c << std::cos(t), std::sin(t);
      const Vec p = rad * L * c;
      pts.emplace_back(p(0), p(1));
    }
    ellipses.push_back(std::move(pts));
  }
  double lo_x = 0, hi_x = 0, lo_y = 0, hi_y = 0;
  for (const auto* group : {&ellipses, &paths})
    for (const auto& pts : *group)
      for (const auto& [a, b] : pts) {
        lo_x = std::min(lo_x, a);
        hi_x = std::max(hi_x, a);
        lo_y = std::min(lo_y, b);
        hi_y = std::max(hi_y, b);
      }
  const double pad = 0.05 * std::max({hi_x - lo_x, hi_y - lo_y, 1.0});
  lo_x -= pad;
  hi_x += pad;
  lo_y -= pad;
  hi_y += pad;
  const double size = 600.0;
  const double scale = size / std::max(hi_x - lo_x, hi_y - lo_y);
  auto px = [&](double a) { return fmt_fixed((a - lo_x) * scale, 3); };
  auto py = [&](double b) { return fmt_fixed((hi_y - b) * scale, 3); };
  auto poly = [&](const std::vector<std::pair<double, double>>& pts, const char* style) {
    os << "<polyline fill=\"none\" " << style << " points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) os << (i ? " " : "") << px(pts[i].first) << ',' << py(pts[i].second);
    os << "\"/>\n";
  };
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt_fixed((hi_x - lo_x) * scale, 0) << "\" height=\""
     << fmt_fixed((hi_y - lo_y) * scale, 0) << "\">\n";
  for (const auto& e : ellipses) poly(e, "stroke=\"#999999\" stroke-width=\"1\"");
  for (const auto& p : paths) poly(p, "stroke=\"#1f4e9c\" stroke-width=\"1.5\"");
  os << "</svg>\n";
}

void write_text_file(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  std::error_code ec;
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path(), ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create directory for '" + path + "': " + ec.message());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot open '" + path + "' for writing");
  out << content;
  out.flush();
  if (!out) throw Error(ErrorKind::IoError, "failed writing '" + path + "'");
}

}  // namespace smpc
