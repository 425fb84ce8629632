#include "indo/experiment.hpp"

#include <json.hpp>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "indo/costs.hpp"
#include "indo/network.hpp"

namespace indo {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmtg(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

json json_num(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

[[noreturn]] void fail_at(const std::string& file, int line,
                          const std::string& msg) {
  throw std::runtime_error(file + ":" + std::to_string(line) + ": " + msg);
}

std::string sanitize_filename(const std::string& name) {
  std::string out;
  for (char c : name)
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' ||
            c == '-' || c == '_')
               ? c
               : '_';
  return out;
}

}  // namespace

double ParamExpr::resolve(double m, double M) const {
  switch (ref) {
    case Ref::big_m: return scale * M;
    case Ref::small_m: return scale * m;
    default: return scale;
  }
}

std::string ParamExpr::label() const {
  if (ref == Ref::none) return fmtg(scale);
  std::string suffix = ref == Ref::big_m ? "M" : "m";
  return scale == 1.0 ? suffix : fmtg(scale) + suffix;
}

ParamExpr ParamExpr::number(double v) { return {v, Ref::none}; }
ParamExpr ParamExpr::big_M(double scale) { return {scale, Ref::big_m}; }
ParamExpr ParamExpr::small_m(double scale) { return {scale, Ref::small_m}; }

ParamExpr ParamExpr::parse(const std::string& text) {
  std::string t = trim(text);
  if (t.empty()) throw std::runtime_error("empty parameter expression");
  if (t == "M") return big_M();
  if (t == "m") return small_m();
  Ref ref = Ref::none;
  if (t.back() == 'M' || t.back() == 'm') {
    ref = t.back() == 'M' ? Ref::big_m : Ref::small_m;
    t.pop_back();
    if (!t.empty() && t.back() == '*') t.pop_back();
    if (t.empty()) return {1.0, ref};
  }
  std::size_t used = 0;
  double v;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    throw std::runtime_error("bad parameter expression '" + trim(text) + "'");
  }
  if (used != t.size())
    throw std::runtime_error("bad parameter expression '" + trim(text) + "'");
  return {v, ref};
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path.string());
}

ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& display_name) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  int line_no = 0;
  RunSpec* run = nullptr;
  bool saw_ell = false, saw_eta = false;
  bool saw_problem_n = false;

  auto parse_bool = [&](const std::string& v) {
    if (v == "true" || v == "on" || v == "1") return true;
    if (v == "false" || v == "off" || v == "0") return false;
    fail_at(display_name, line_no, "expected a boolean, got '" + v + "'");
  };
  auto parse_int = [&](const std::string& v) {
    try {
      std::size_t used;
      long out = std::stol(v, &used);
      if (used != v.size()) throw std::invalid_argument("");
      return out;
    } catch (const std::exception&) {
      fail_at(display_name, line_no, "expected an integer, got '" + v + "'");
    }
  };
  auto parse_double = [&](const std::string& v) {
    try {
      std::size_t used;
      double out = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument("");
      return out;
    } catch (const std::exception&) {
      fail_at(display_name, line_no, "expected a number, got '" + v + "'");
    }
  };
  auto parse_expr = [&](const std::string& v) {
    try {
      return ParamExpr::parse(v);
    } catch (const std::exception& e) {
      fail_at(display_name, line_no, e.what());
    }
  };

  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        fail_at(display_name, line_no, "malformed section header");
      section = trim(t.substr(1, t.size() - 2));
      if (section == "run") {
        cfg.runs.emplace_back();
        run = &cfg.runs.back();
        saw_ell = saw_eta = false;
      } else if (section != "problem" && section != "network" &&
                 section != "output" && section != "monitors") {
        fail_at(display_name, line_no, "unknown section [" + section + "]");
      }
      continue;
    }
    auto eq = t.find('=');
    if (eq == std::string::npos)
      fail_at(display_name, line_no, "expected key = value");
    std::string key = trim(t.substr(0, eq));
    std::string val = trim(t.substr(eq + 1));
    if (key.empty() || val.empty())
      fail_at(display_name, line_no, "expected key = value");

    if (section == "problem") {
      if (key == "kind") {
        if (val == "quadratic") cfg.problem.kind = ProblemKind::quadratic;
        else if (val == "logistic") cfg.problem.kind = ProblemKind::logistic;
        else fail_at(display_name, line_no, "kind must be quadratic|logistic");
      } else if (key == "n") {
        cfg.problem.n = static_cast<int>(parse_int(val));
        saw_problem_n = true;
        if (cfg.problem.n < 1) fail_at(display_name, line_no, "n must be >= 1");
      } else if (key == "seed") {
        cfg.problem.seed = static_cast<std::uint64_t>(parse_int(val));
      } else if (key == "dataset") {
        cfg.problem.dataset = val;
      } else if (key == "reg") {
        cfg.problem.reg = parse_double(val);
        if (!(cfg.problem.reg > 0.0))
          fail_at(display_name, line_no, "reg must be > 0");
      } else {
        fail_at(display_name, line_no, "unknown [problem] key '" + key + "'");
      }
    } else if (section == "network") {
      if (key == "nodes") {
        cfg.network.nodes = static_cast<int>(parse_int(val));
        if (cfg.network.nodes < 2)
          fail_at(display_name, line_no, "nodes must be >= 2");
      } else if (key == "seed") {
        cfg.network.seed = static_cast<std::uint64_t>(parse_int(val));
      } else {
        fail_at(display_name, line_no, "unknown [network] key '" + key + "'");
      }
    } else if (section == "output") {
      if (key == "dir") cfg.output_dir = val;
      else if (key == "graph") cfg.graph_export = val;
      else fail_at(display_name, line_no, "unknown [output] key '" + key + "'");
    } else if (section == "monitors") {
      if (key == "lyapunov") cfg.monitors.lyapunov = parse_bool(val);
      else if (key == "inequalities") cfg.monitors.inequalities = parse_bool(val);
      else if (key == "rate_report") cfg.monitors.rate_report = parse_bool(val);
      else if (key == "zeta") {
        cfg.monitors.zeta = parse_double(val);
        if (!(cfg.monitors.zeta > 0.0))
          fail_at(display_name, line_no, "zeta must be > 0");
      } else {
        fail_at(display_name, line_no, "unknown [monitors] key '" + key + "'");
      }
    } else if (section == "run") {
      if (key == "name") {
        run->name = val;
      } else if (key == "variant") {
        if (val == "indo") run->variant = Variant::indo;
        else if (val == "esom") run->variant = Variant::esom;
        else fail_at(display_name, line_no, "variant must be indo|esom");
      } else if (key == "alpha") {
        run->alpha = parse_expr(val);
        if (!(run->alpha.scale > 0.0))
          fail_at(display_name, line_no, "alpha must be positive");
      } else if (key == "eps") {
        run->eps = parse_expr(val);
        if (!(run->eps.scale > 0.0))
          fail_at(display_name, line_no, "eps must be positive");
      } else if (key == "gamma") {
        if (val == "practical") {
          run->gamma_practical = true;
        } else {
          run->gamma_practical = false;
          run->gamma = parse_expr(val);
          if (!(run->gamma.scale > 0.0))
            fail_at(display_name, line_no, "gamma must be positive");
        }
      } else if (key == "ell") {
        if (saw_eta)
          fail_at(display_name, line_no, "ell and eta are mutually exclusive");
        saw_ell = true;
        int ell = static_cast<int>(parse_int(val));
        if (ell < 1) fail_at(display_name, line_no, "ell must be >= 1");
        run->inner = InnerPolicy::fixed(ell);
      } else if (key == "eta") {
        if (saw_ell)
          fail_at(display_name, line_no, "ell and eta are mutually exclusive");
        saw_eta = true;
        double eta = parse_double(val);
        if (!(eta > 0.0)) fail_at(display_name, line_no, "eta must be > 0");
        int cap = run->inner.cap;
        run->inner = InnerPolicy::forcing(eta, cap);
      } else if (key == "ell_cap") {
        int cap = static_cast<int>(parse_int(val));
        if (cap < 1) fail_at(display_name, line_no, "ell_cap must be >= 1");
        run->inner.cap = cap;
      } else if (key == "warm_start") {
        run->warm_start = parse_bool(val);
      } else if (key == "d0") {
        if (val == "zero") run->d0 = D0Policy::zero;
        else if (val == "warm") run->d0 = D0Policy::warm;
        else if (val == "initial-solve" || val == "initial_solve")
          run->d0 = D0Policy::initial_solve;
        else fail_at(display_name, line_no, "d0 must be zero|warm|initial-solve");
      } else if (key == "K") {
        run->K = static_cast<int>(parse_int(val));
        if (run->K < 1) fail_at(display_name, line_no, "K must be >= 1");
      } else if (key == "forcing_norm") {
        if (val == "two") run->forcing_norm = ForcingNorm::two;
        else if (val == "inf") run->forcing_norm = ForcingNorm::inf;
        else fail_at(display_name, line_no, "forcing_norm must be two|inf");
      } else if (key == "check_gamma") {
        run->check_gamma = parse_bool(val);
      } else {
        fail_at(display_name, line_no, "unknown [run] key '" + key + "'");
      }
    } else {
      fail_at(display_name, line_no, "key outside of any section");
    }
  }

  if (cfg.problem.kind == ProblemKind::logistic && cfg.problem.dataset.empty())
    throw std::runtime_error(display_name +
                             ": logistic problems need a dataset path");
  if (cfg.problem.kind == ProblemKind::quadratic && !saw_problem_n &&
      cfg.problem.n < 1)
    throw std::runtime_error(display_name + ": quadratic problems need n >= 1");
  if (cfg.runs.empty()) cfg.runs.emplace_back();  // defaults: INDO-1
  return cfg;
}

ResolvedRun resolve_run(const RunSpec& spec, const ProblemInstance& inst,
                        const Network& net) {
  ResolvedRun out;
  SolverConfig& c = out.config;
  c.variant = spec.variant;
  c.alpha = spec.alpha.resolve(inst.m, inst.M);
  c.eps = spec.eps.resolve(inst.m, inst.M);
  c.gamma = spec.variant == Variant::esom ? 1.0
            : spec.gamma_practical
                ? practical_gamma(inst.m, inst.M, c.alpha, c.eps, net.w_d)
                : spec.gamma.resolve(inst.m, inst.M);
  c.inner = spec.inner;
  c.d0 = spec.d0.value_or(spec.warm_start ? D0Policy::warm : D0Policy::zero);
  c.forcing_norm = spec.forcing_norm;
  c.check_gamma = spec.check_gamma;
  out.K = spec.K;

  if (!spec.name.empty()) {
    out.name = spec.name;
  } else {
    // The method naming scheme: INDO-l, ESOM-l-alpha-eps (parameters spelled
    // relative to M and m where configured that way).
    std::string base = spec.variant == Variant::indo ? "INDO" : "ESOM";
    std::string policy =
        spec.inner.mode == InnerPolicy::Mode::fixed_count
            ? std::to_string(spec.inner.ell)
            : "f" + fmtg(spec.inner.eta);
    const bool canonical = spec.variant == Variant::indo &&
                           spec.alpha.label() == "M" && spec.eps.label() == "M";
    out.name = canonical ? base + "-" + policy
                         : base + "-" + policy + "-" + spec.alpha.label() +
                               "-" + spec.eps.label();
  }

  try {
    c.validate(inst, net);
  } catch (const std::exception& e) {
    throw std::invalid_argument("run '" + out.name + "': " + e.what());
  }
  return out;
}

void write_trace_csv(const std::vector<TraceRecord>& trace, std::ostream& out) {
  out << "k,metric,residual_2norm,comm_rounds_cum,sp_cost_cum,lyapunov,"
         "ell_used\n";
  for (const TraceRecord& r : trace) {
    out << r.k << ',' << fmt17(r.metric) << ',' << fmt17(r.residual_2norm)
        << ',' << r.comm_rounds_cum << ',' << fmt17(r.sp_cost_cum) << ',';
    if (r.lyapunov) out << fmt17(*r.lyapunov);
    out << ',' << r.ell_used << '\n';
  }
}

namespace {

json rate_report_json(const RateReport& rep) {
  json j;
  j["gamma_interval"] = {rep.gamma_interval.lo, rep.gamma_interval.hi};
  j["practical_gamma"] = json_num(rep.practical_gamma);
  if (rep.sigma_T)
    j["sigma_T"] = {{"value", json_num(rep.sigma_T->value)},
                    {"converged", rep.sigma_T->converged}};
  else
    j["sigma_T"] = nullptr;
  j["block_norm_T"] =
      rep.block_norm_T ? json_num(*rep.block_norm_T) : json(nullptr);
  j["equal_diagonal"] = rep.equal_diagonal;
  if (rep.bounds)
    j["bounds"] = {{"esom", json_num(rep.bounds->esom)},
                   {"indo", json_num(rep.bounds->indo)},
                   {"indo_valid", rep.bounds->indo_valid}};
  else
    j["bounds"] = nullptr;
  j["ell_bound"] = rep.ell_bound ? json(*rep.ell_bound) : json(nullptr);
  json c;
  c["feasible"] = rep.constants.feasible;
  if (!rep.constants.note.empty()) c["note"] = rep.constants.note;
  if (rep.constants.feasible) {
    c["zeta"] = json_num(rep.constants.zeta);
    c["beta"] = json_num(rep.constants.beta);
    c["phi"] = json_num(rep.constants.phi);
    c["delta_a"] = json_num(rep.constants.delta_a);
    c["delta_b"] = json_num(rep.constants.delta_b);
    c["delta"] = json_num(rep.constants.delta);
    c["delta_tilde"] = json_num(rep.constants.delta_tilde);
    c["eta_bar"] = json_num(rep.constants.eta_bar);
    c["ratio"] = json_num(rep.constants.ratio);
  }
  j["contraction"] = c;
  return j;
}

json problem_json(const ProblemSpec& spec, const ProblemInstance& inst) {
  json j;
  j["kind"] = inst.kind == ProblemKind::quadratic ? "quadratic" : "logistic";
  j["n"] = inst.n;
  j["N"] = inst.N;
  j["m"] = json_num(inst.m);
  j["M"] = json_num(inst.M);
  j["L"] = json_num(inst.L);
  j["seed"] = spec.seed;
  if (inst.kind == ProblemKind::logistic) {
    j["dataset"] = spec.dataset;
    j["reg"] = json_num(inst.reg);
    j["samples"] = inst.node_offset.back();
  }
  return j;
}

json network_json(const NetworkSpec& spec, const Network& net) {
  json j;
  j["N"] = net.N;
  j["seed"] = spec.seed;
  j["lambda2"] = json_num(net.lambda2);
  j["lambda_max"] = json_num(net.lambda_max);
  j["w_d"] = json_num(net.w_d);
  j["w_m"] = json_num(net.w_m);
  return j;
}

json parameters_json(const SolverConfig& c, int K) {
  json j;
  j["variant"] = c.variant == Variant::indo ? "indo" : "esom";
  j["alpha"] = json_num(c.alpha);
  j["eps"] = json_num(c.eps);
  if (c.variant == Variant::indo) j["gamma"] = json_num(c.gamma);
  if (c.inner.mode == InnerPolicy::Mode::fixed_count) {
    j["policy"] = "fixed";
    j["ell"] = c.inner.ell;
  } else {
    j["policy"] = "forcing";
    j["eta"] = json_num(c.inner.eta);
    j["ell_cap"] = c.inner.cap;
    j["forcing_norm"] = c.forcing_norm == ForcingNorm::two ? "two" : "inf";
  }
  switch (c.d0) {
    case D0Policy::zero: j["d0"] = "zero"; break;
    case D0Policy::warm: j["d0"] = "warm"; break;
    case D0Policy::initial_solve: j["d0"] = "initial-solve"; break;
  }
  j["K"] = K;
  return j;
}

ProblemInstance build_problem(const ExperimentConfig& cfg) {
  if (cfg.problem.kind == ProblemKind::quadratic)
    return quadratic_generate(cfg.problem.n, cfg.network.nodes,
                              cfg.problem.seed);
  std::filesystem::path p = cfg.problem.dataset;
  if (!std::filesystem::exists(p))
    throw std::runtime_error("dataset not found at " + p.string() +
                             "; pass --data or set INDO_DATA_DIR");
  return logistic_load(p, cfg.network.nodes, cfg.problem.reg,
                       cfg.problem.seed);
}

}  // namespace

std::vector<RunOutput> run_experiment(const ExperimentConfig& cfg) {
  Network net = generate_rgg(cfg.network.nodes, cfg.network.seed);
  ProblemInstance inst = build_problem(cfg);

  std::filesystem::path dir = cfg.output_dir;
  std::filesystem::create_directories(dir);
  if (!cfg.graph_export.empty()) {
    std::ofstream g(dir / cfg.graph_export);
    write_edge_list(net, g);
  }

  Vec y_star;
  if (inst.kind == ProblemKind::quadratic && cfg.monitors.lyapunov)
    y_star = quadratic_solution(inst);

  std::vector<RunOutput> outputs;
  for (const RunSpec& spec : cfg.runs) {
    ResolvedRun rr = resolve_run(spec, inst, net);

    RunHooks hooks;
    std::shared_ptr<LyapunovMonitor> lyap;
    if (cfg.monitors.lyapunov && inst.kind == ProblemKind::quadratic) {
      lyap = std::make_shared<LyapunovMonitor>(inst, net, rr.config.alpha,
                                               rr.config.eps, y_star);
      hooks.lyapunov = [lyap](const Vec& x, const Vec& q) {
        return lyap->value(x, q);
      };
    }
    hooks.record_internals = cfg.monitors.inequalities;

    RunOutput out;
    out.name = rr.name;
    out.config = rr.config;
    out.result = run(rr.config, inst, net, rr.K, hooks,
                     make_cost_model(rr.config.variant, inst));

    const std::string stem = sanitize_filename(rr.name);
    out.csv_path = dir / (stem + ".csv");
    out.sidecar_path = dir / (stem + ".json");
    {
      std::ofstream csv(out.csv_path);
      write_trace_csv(out.result.trace, csv);
    }

    json side;
    side["name"] = rr.name;
    side["csv"] = stem + ".csv";  // file name only, directory-independent
    side["problem"] = problem_json(cfg.problem, inst);
    side["network"] = network_json(cfg.network, net);
    side["parameters"] = parameters_json(rr.config, rr.K);
    side["counters"] = {
        {"comm_rounds", out.result.final_state.comm_rounds},
        {"sp_cost", json_num(out.result.final_state.sp_cost)},
        {"initial_solve_iterations", out.result.initial_solve_iterations},
        {"max_dual_residual", json_num(out.result.max_dual_residual)},
        {"iterations", static_cast<int>(out.result.trace.size())}};
    side["aborted"] = out.result.aborted;
    if (out.result.aborted) side["abort_reason"] = out.result.abort_reason;
    if (cfg.monitors.rate_report)
      side["rate_report"] = rate_report_json(make_rate_report(inst, net,
                                                              rr.config));
    if (cfg.monitors.inequalities && !out.result.internals.empty()) {
      const double zeta = cfg.monitors.zeta > 0.0
                              ? cfg.monitors.zeta
                              : (inst.m + inst.M) / (inst.m * inst.M);
      InequalityReport rep = check_inequalities(
          out.result, inst, net, rr.config.alpha, rr.config.eps, zeta);
      side["inequalities"] = {
          {"zeta", json_num(zeta)},
          {"iterations", rep.iterations},
          {"violations", static_cast<int>(rep.violations.size())},
          {"min_margins",
           {{"model", json_num(rep.min_model)},
            {"forcing", json_num(rep.min_forcing)},
            {"step_error", json_num(rep.min_step_error)},
            {"descent", json_num(rep.min_descent)}}}};
    }
    {
      std::ofstream sf(out.sidecar_path);
      sf << side.dump(2) << '\n';
    }
    outputs.push_back(std::move(out));
  }
  return outputs;
}

ExperimentConfig reproduce_preset(const std::string& name,
                                  const std::string& dataset_root,
                                  const std::string& output_dir) {
  ExperimentConfig cfg;
  cfg.network = {30, 3};
  cfg.output_dir = output_dir;
  cfg.monitors.rate_report = true;

  auto add_runs = [&cfg](int K) {
    for (int ell : {1, 2}) {
      RunSpec indo;
      indo.variant = Variant::indo;
      indo.alpha = ParamExpr::big_M();
      indo.eps = ParamExpr::big_M();
      indo.inner = InnerPolicy::fixed(ell);
      indo.d0 = D0Policy::initial_solve;
      indo.K = K;
      cfg.runs.push_back(indo);

      std::vector<std::pair<ParamExpr, ParamExpr>> combos = {
          {ParamExpr::big_M(), ParamExpr::big_M()},
          {ParamExpr::big_M(), ParamExpr::small_m()}};
      if (cfg.problem.kind == ProblemKind::quadratic)
        combos.push_back({ParamExpr::big_M(0.01), ParamExpr::big_M()});
      for (auto& [a, e] : combos) {
        RunSpec esom;
        esom.variant = Variant::esom;
        esom.alpha = a;
        esom.eps = e;
        esom.inner = InnerPolicy::fixed(ell);
        esom.K = K;
        cfg.runs.push_back(esom);
      }
    }
  };

  if (name == "fig1") {
    cfg.problem.kind = ProblemKind::quadratic;
    cfg.problem.n = 100;
    cfg.problem.seed = 7;
    cfg.monitors.lyapunov = true;
    add_runs(2000);
    return cfg;
  }

  std::string dataset;
  int K = 500;
  if (name == "fig2") dataset = "mushrooms";
  else if (name == "fig3") dataset = "lsvt";
  else if (name == "fig4") { dataset = "parkinsons"; K = 200; }
  else
    throw std::runtime_error("unknown preset '" + name +
                             "' (expected fig1|fig2|fig3|fig4)");
  cfg.problem.kind = ProblemKind::logistic;
  cfg.problem.reg = 1e-4;
  cfg.problem.seed = 7;
  cfg.problem.dataset =
      (std::filesystem::path(dataset_root.empty() ? "." : dataset_root) /
       dataset)
          .string();
  add_runs(K);
  return cfg;
}

std::string analyze_report(const ExperimentConfig& cfg) {
  Network net = generate_rgg(cfg.network.nodes, cfg.network.seed);
  ProblemInstance inst = build_problem(cfg);
  json j;
  j["problem"] = problem_json(cfg.problem, inst);
  j["network"] = network_json(cfg.network, net);
  json runs = json::array();
  for (const RunSpec& spec : cfg.runs) {
    ResolvedRun rr = resolve_run(spec, inst, net);
    json r;
    r["name"] = rr.name;
    r["parameters"] = parameters_json(rr.config, rr.K);
    r["rate_report"] = rate_report_json(make_rate_report(inst, net, rr.config));
    runs.push_back(r);
  }
  j["runs"] = runs;
  return j.dump(2) + "\n";
}

}  // namespace indo
