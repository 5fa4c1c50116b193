// dclsq: command-line front end for the dcls library.
//
// Exit codes: 0 success, 2 validation error, 3 budget exceeded,
// 4 acceptance check failed in an mc-* run, 1 anything else.

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "dcls/dcls.hpp"

namespace {

using namespace dcls;

struct Globals {
  std::uint64_t seed = 1;
  std::string out;
  std::string format = "json";
  std::uint64_t budget = EnumerationBudget{}.max_sets;
  std::size_t threads = 1;
  std::string config;
};

// Options shared by most subcommands; members double as defaults.
struct Args {
  std::string basis = "legendre";
  std::string family = "dc";
  std::size_t n = 2, d = 2, m = 0;
  std::size_t n_min = 1, n_max = 4;
  double r = 1.0, delta = 0.5, gamma = 0.01, tau = 0.0;
  std::string condition = "enc2_dc";
  std::size_t trials = 100;
  std::string function = "exp_sum";
  std::string set_file, samples_file;
  std::size_t hc = 0;
  std::size_t quad_order = 30;
  std::string method = "exhaustive";
  double relax_c = 1.0, relax_xi = 1.0;
  std::string encode = "none";
  std::string strategy = "automatic";
  double k_explicit = 0.0;
  std::string cond_basis;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DomainError("cannot write '" + path + "'");
  out << body;
}

// Config file values become defaults; explicit flags parsed afterwards override them.
void apply_config(const json& j, Globals& g, Args& a) {
  auto get = [&](const char* key, auto& dst) {
    if (j.contains(key)) dst = j.at(key).get<std::decay_t<decltype(dst)>>();
  };
  get("seed", g.seed);
  get("out", g.out);
  get("format", g.format);
  get("budget", g.budget);
  get("threads", g.threads);
  get("family", a.family);
  get("n", a.n);
  get("d", a.d);
  get("m", a.m);
  get("n_min", a.n_min);
  get("n_max", a.n_max);
  get("r", a.r);
  get("delta", a.delta);
  get("gamma", a.gamma);
  get("tau", a.tau);
  get("condition", a.condition);
  get("trials", a.trials);
  get("function", a.function);
  get("set", a.set_file);
  get("samples", a.samples_file);
  get("quad_order", a.quad_order);
  get("method", a.method);
  if (j.contains("basis")) {
    auto& b = j.at("basis");
    a.basis = b.is_string() ? b.get<std::string>()
                            : std::to_string(b.at("theta1").get<double>()) + "," + std::to_string(b.at("theta2").get<double>());
  }
}

IndexSet load_set(const Args& a) {
  if (!a.set_file.empty()) return index_set_from_json(json::parse(read_file(a.set_file)));
  if (a.hc > 0) return hyperbolic_cross(a.hc, a.d);
  throw DomainError("an index set is required: --set FILE or --hc N");
}

SampleSet load_or_draw_samples(const Args& a, const Globals& g, const JacobiParams& p, std::size_t d) {
  if (!a.samples_file.empty()) {
    SampleSet s = samples_from_csv(read_file(a.samples_file), json::parse(read_file(a.samples_file + ".json")));
    if (!(s.params == p)) throw DomainError("sample density differs from --basis");
    return s;
  }
  if (a.m == 0) throw DomainError("either --samples FILE or --m is required");
  return draw_samples(p, d, a.m, g.seed);
}

class Output {
public:
  explicit Output(const Globals& g) : g_(g), start_(std::chrono::steady_clock::now()) {}

  void emit_json(const json& j) const { write(j.dump(2) + "\n"); }

  void emit_table(const Table& t, const json& as_json) const {
    if (g_.format == "csv") write(to_csv(t));
    else emit_json(as_json);
  }

  void meta(const json& config, const json& summary) const {
    if (g_.out.empty()) return;
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    json m{{"config", config}, {"library_version", kVersion}, {"wall_time_seconds", wall}, {"summary", summary}};
    write_file(g_.out + ".meta.json", m.dump(2) + "\n");
  }

private:
  void write(const std::string& body) const {
    if (g_.out.empty()) std::cout << body;
    else write_file(g_.out, body);
  }

  const Globals& g_;
  std::chrono::steady_clock::time_point start_;
};

ExperimentConfig experiment_config(ExperimentKind kind, const Args& a, const Globals& g) {
  ExperimentConfig c;
  c.kind = kind;
  c.params = JacobiParams::parse(a.basis);
  c.family = parse_family(a.family);
  c.n = a.n;
  c.n_min = a.n_min;
  c.n_max = a.n_max;
  c.d = a.d;
  c.r = a.r;
  c.delta = a.delta;
  c.tau = a.tau;
  c.m = a.m;
  c.m_condition = parse_condition_kind(a.condition);
  c.trials = a.trials;
  c.seed = g.seed;
  c.function = a.function;
  if (!a.set_file.empty() || a.hc > 0) c.fixed_set = load_set(a);
  c.quadrature_order = a.quad_order;
  c.budget.max_sets = g.budget;
  c.threads = g.threads;
  return c;
}

int run_experiment_command(ExperimentKind kind, const Args& a, const Globals& g, const Output& out) {
  ExperimentConfig c = experiment_config(kind, a, g);
  Report r = run_experiment(c);
  out.emit_table(r.table, to_json(r));
  json cfg = config_to_json(c);
  out.meta(cfg, r.summary);
  std::cerr << r.kind << ": " << r.summary.dump() << "\n";
  return r.pass ? 0 : 4;
}

int cmd_enumerate(const Args& a, const Globals& g, const Output& out) {
  Family fam = parse_family(a.family);
  std::size_t d = family_dimension(fam, a.n, a.d);
  auto sets = enumerate_family(fam, a.n, a.d, EnumerationBudget{g.budget});
  auto b = cardinality_bounds(a.n, fam == Family::anchored ? std::max<std::size_t>(d, 1) : a.d);
  json bounds{{"first_dc", b.first_dc.str()},
              {"first_anchored", b.first_anchored.str()},
              {"second_dc", b.second_dc.str()},
              {"second_anchored", b.second_anchored.str()},
              {"lower_dc", b.lower_dc.str()}};
  Table t{{"index", "set", "encoding"}, {}};
  json arr = json::array();
  for (std::size_t k = 0; k < sets.size(); ++k) {
    json e = nullptr;
    std::string es;
    if (a.encode != "none") {
      auto kind = a.encode == "pointer" ? EncodingKind::pointer : EncodingKind::bitstream;
      if (a.encode != "pointer" && a.encode != "bitstream") throw DomainError("--encode must be none, bitstream or pointer");
      Encoding enc = encode(sets[k], kind, std::max<std::size_t>(d, 1));
      e = to_json(enc);
      es = kind == EncodingKind::bitstream ? std::string(e["hex"]) : e["tuple"].dump();
    }
    t.rows.push_back({std::to_string(k), format_set(sets[k], std::max<std::size_t>(d, 1)), es});
    json item{{"set", to_json(sets[k], d)}};
    if (!e.is_null()) item["encoding"] = e;
    arr.push_back(item);
  }
  json j{{"family", std::string(to_string(fam))}, {"n", a.n}, {"d", d}, {"count", sets.size()}, {"bounds", bounds}, {"sets", arr}};
  out.emit_table(t, j);
  out.meta({{"command", "enumerate"}, {"family", a.family}, {"n", a.n}, {"d", a.d}}, {{"count", sets.size()}, {"bounds", bounds}});
  return 0;
}

int cmd_hc(const Args& a, const Globals&, const Output& out) {
  IndexSet h = hyperbolic_cross(a.n, a.d);
  double bound = a.n * std::pow(1.0 + std::log(static_cast<double>(a.n)), static_cast<double>(a.d) - 1.0);
  Table t{{"index", "nu"}, {}};
  for (std::size_t k = 0; k < h.size(); ++k) t.rows.push_back({std::to_string(k), format_set(IndexSet{h[k]}, a.d)});
  out.emit_table(t, {{"n", a.n}, {"d", a.d}, {"size", h.size()}, {"size_bound", bound}, {"set", to_json(h, a.d)}});
  return 0;
}

int cmd_kquantity(const Args& a, const Globals&, const Output& out) {
  JacobiParams p = JacobiParams::parse(a.basis);
  IndexSet s = load_set(a);
  KStrategy st = a.strategy == "endpoint" ? KStrategy::endpoint
                 : a.strategy == "grid_refine" ? KStrategy::grid_refine
                 : a.strategy == "automatic" ? KStrategy::automatic
                                             : throw DomainError("unknown strategy '" + a.strategy + "'");
  double k = k_quantity(p, s, st);
  out.emit_json({{"params", to_json(p)}, {"n", s.size()}, {"K", k}, {"exact", k_quantity_is_exact(p, st)}, {"strategy", a.strategy}});
  return 0;
}

int cmd_conditions(const Args& a, const Globals&, const Output& out) {
  JacobiParams p = JacobiParams::parse(a.basis);
  Table t{{"kind", "m_star", "overflow", "rhs_at_m_star", "threshold_on", "k_source"}, {}};
  json rows = json::array();
  std::optional<double> kx;
  if (a.k_explicit > 0) kx = a.k_explicit;
  for (ConditionKind kind : kAllConditionKinds) {
    ConditionSpec s = ConditionSpec::for_params(kind, a.n, a.d, a.r, p);
    s.delta = a.delta;
    s.gamma = a.gamma;
    s.family = parse_family(a.family);
    std::string k_source = kx ? "explicit" : "closed_form";
    std::vector<std::string> row;
    json jr{{"kind", to_string(kind)}};
    try {
      auto res = min_sample_size(s, kind == ConditionKind::enc1_explicit || kind == ConditionKind::enc2_explicit ? std::nullopt : kx);
      jr["m_star"] = res.overflow ? json(nullptr) : json(res.m);
      jr["overflow"] = res.overflow;
      jr["rhs"] = res.rhs;
      row = {to_string(kind), res.overflow ? "" : std::to_string(res.m), res.overflow ? "1" : "0", format_real(res.rhs)};
    } catch (const DomainError& e) {
      jr["error"] = e.what();
      row = {to_string(kind), "", "0", ""};
      k_source = "unsupported";
    }
    row.push_back(threshold_on_m(kind) ? "m" : "m/ln m");
    row.push_back(k_source);
    jr["threshold_on"] = row[4];
    jr["k_source"] = k_source;
    t.rows.push_back(row);
    rows.push_back(jr);
  }
  out.emit_table(t, {{"n", a.n}, {"d", a.d}, {"r", a.r}, {"delta", a.delta}, {"zeta", zeta(a.delta)}, {"params", to_json(p)}, {"conditions", rows}});
  return 0;
}

int cmd_sample(const Args& a, const Globals& g, const Output&) {
  if (a.m == 0) throw DomainError("--m is required");
  SampleSet s = draw_samples(JacobiParams::parse(a.basis), a.d, a.m, g.seed);
  if (g.out.empty()) {
    std::cout << samples_to_csv(s);
  } else {
    write_file(g.out, samples_to_csv(s));
    write_file(g.out + ".json", samples_sidecar(s).dump(2) + "\n");
  }
  return 0;
}

int cmd_fit(const Args& a, const Globals& g, const Output& out) {
  JacobiParams p = JacobiParams::parse(a.basis);
  IndexSet set = load_set(a);
  std::size_t d = std::max<std::size_t>({a.d, set.max_coordinate(), 1});
  SampleSet s = load_or_draw_samples(a, g, p, d);
  TestFunction u = make_test_function(a.function, std::min(a.d, s.d));
  Fit f = solve_projection(p, set, s, evaluate_at_samples(u.f, s));
  json j = to_json(f);
  j["stable_half"] = stability_check(f, 0.5);
  if (s.d <= 4) j["l2_error"] = l2_error(p, u.f, f.as_function(), s.d, a.quad_order);
  out.emit_json(j);
  return 0;
}

int cmd_select(const Args& a, const Globals& g, const Output& out) {
  JacobiParams p = JacobiParams::parse(a.basis);
  Family fam = parse_family(a.family);
  SampleSet s = load_or_draw_samples(a, g, p, sample_dimension(fam, a.n, a.d));
  TestFunction u = make_test_function(a.function, std::min(a.d, s.d));
  auto b = evaluate_at_samples(u.f, s);
  EnumerationBudget budget{g.budget};
  SelectionResult r;
  if (a.method == "exhaustive") r = exhaustive_select(fam, a.n, p, s, b, budget);
  else if (a.method == "greedy") r = greedy_select(fam, a.n, p, s, b);
  else if (a.method == "relaxed") r = relaxed_select(fam, a.n, p, s, b, a.relax_c, a.relax_xi, true, budget);
  else throw DomainError("--method must be exhaustive, greedy or relaxed");
  out.emit_json(to_json(r));
  return 0;
}

int cmd_oracle(const Args& a, const Globals& g, const Output& out) {
  JacobiParams p = JacobiParams::parse(a.basis);
  TestFunction u = make_test_function(a.function, a.d);
  auto r = best_n_term_oracle(parse_family(a.family), a.n, p, u.f, a.d, a.quad_order, std::nullopt, EnumerationBudget{g.budget});
  if (r.tail_warning) std::cerr << "warning: working superset margin is thin; sigma_n tail may be underestimated\n";
  out.emit_json(to_json(r));
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  Globals g;
  Args a;
  CLI::App app{"Least-squares polynomial approximation on downward closed and anchored index sets"};
  app.require_subcommand(1);
  app.fallthrough(); // global flags may follow the subcommand
  app.add_option("--seed", g.seed, "master seed");
  app.add_option("--out", g.out, "output path (stdout if omitted)");
  app.add_option("--format", g.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--budget", g.budget, "maximum number of enumerated sets");
  app.add_option("--threads", g.threads, "worker threads (0 = all cores; DCLSQ_THREADS overrides)");
  app.add_option("--config", g.config, "JSON config file; flags override its values");

  auto basis = [&](CLI::App* c) { c->add_option("--basis", a.basis, "legendre, chebyshev or theta1,theta2"); };
  auto family = [&](CLI::App* c) { c->add_option("--family", a.family, "dc or anchored"); };
  auto nd = [&](CLI::App* c) {
    c->add_option("--n", a.n, "cardinality")->check(CLI::PositiveNumber);
    c->add_option("--d", a.d, "dimension")->check(CLI::PositiveNumber);
  };
  auto setopt = [&](CLI::App* c) {
    c->add_option("--set", a.set_file, "index set JSON file");
    c->add_option("--hc", a.hc, "use the hyperbolic cross H_N^d as the set");
  };
  auto sampling = [&](CLI::App* c) {
    c->add_option("--m", a.m, "number of samples (drawn with --seed)");
    c->add_option("--samples", a.samples_file, "sample CSV with a .json sidecar");
    c->add_option("--function", a.function, "exp_sum, rational, exp_half, exp_quarter, monomial:a,b,...");
    c->add_option("--quad-order", a.quad_order, "Gauss rule order for L2 errors");
  };
  auto mc = [&](CLI::App* c) {
    basis(c);
    family(c);
    nd(c);
    c->add_option("--m", a.m, "explicit sample count (0 = derive from --condition)");
    c->add_option("--condition", a.condition, "condition kind used to derive m");
    c->add_option("--r", a.r, "probability exponent r");
    c->add_option("--delta", a.delta, "stability tolerance");
    c->add_option("--trials", a.trials, "Monte Carlo trials")->check(CLI::PositiveNumber);
    c->add_option("--function", a.function, "test function");
    c->add_option("--quad-order", a.quad_order, "Gauss rule order");
  };

  auto* en = app.add_subcommand("enumerate", "enumerate M_n^d or A_n with cardinality bounds");
  family(en);
  nd(en);
  en->add_option("--encode", a.encode, "none, bitstream or pointer");
  auto* hc = app.add_subcommand("hc", "hyperbolic cross H_n^d");
  nd(hc);
  auto* kq = app.add_subcommand("kquantity", "K(P_Lambda) for a set");
  basis(kq);
  setopt(kq);
  kq->add_option("--d", a.d, "dimension for --hc");
  kq->add_option("--strategy", a.strategy, "automatic, endpoint or grid_refine");
  auto* co = app.add_subcommand("conditions", "minimal sample sizes for every condition kind");
  basis(co);
  family(co);
  nd(co);
  co->add_option("--r", a.r, "probability exponent r");
  co->add_option("--delta", a.delta, "stability tolerance");
  co->add_option("--gamma", a.gamma, "failure probability for the rip kinds");
  co->add_option("--K", a.k_explicit, "explicit K in place of the closed-form bound");
  auto* sa = app.add_subcommand("sample", "draw and save a sample set");
  basis(sa);
  sa->add_option("--d", a.d, "dimension")->check(CLI::PositiveNumber);
  sa->add_option("--m", a.m, "number of points")->check(CLI::PositiveNumber);
  auto* fi = app.add_subcommand("fit", "least-squares projection on a given set");
  basis(fi);
  setopt(fi);
  fi->add_option("--d", a.d, "dimension");
  sampling(fi);
  auto* se = app.add_subcommand("select", "index-set selection");
  basis(se);
  family(se);
  nd(se);
  sampling(se);
  se->add_option("--method", a.method, "exhaustive, greedy or relaxed");
  se->add_option("--C", a.relax_c, "relaxation factor C >= 1");
  se->add_option("--xi", a.relax_xi, "relaxation fraction xi in (0,1]");
  auto* orc = app.add_subcommand("oracle", "best n-term approximation by quadrature");
  basis(orc);
  family(orc);
  nd(orc);
  orc->add_option("--function", a.function, "test function");
  orc->add_option("--quad-order", a.quad_order, "Gauss rule order");
  auto* ms = app.add_subcommand("mc-stability", "Monte Carlo stability probabilities");
  mc(ms);
  setopt(ms);
  auto* ma = app.add_subcommand("mc-accuracy", "Monte Carlo accuracy bounds");
  mc(ma);
  ma->add_option("--tau", a.tau, "truncation level (0 = sup bound of the function)");
  auto* mr = app.add_subcommand("mc-recovery", "exact recovery of random polynomials at m = 4K");
  mc(mr);
  auto* ml = app.add_subcommand("mc-gap", "Monte Carlo selection error against the best n-term error");
  mc(ml);
  auto* cv = app.add_subcommand("converge", "convergence study over a range of n");
  mc(cv);
  cv->add_option("--n-min", a.n_min, "smallest n");
  cv->add_option("--n-max", a.n_max, "largest n");

  try {
    for (int i = 1; i + 1 < argc; ++i)
      if (std::string(argv[i]) == "--config") apply_config(json::parse(read_file(argv[i + 1])), g, a);
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  Output out(g);
  try {
    if (*en) return cmd_enumerate(a, g, out);
    if (*hc) return cmd_hc(a, g, out);
    if (*kq) return cmd_kquantity(a, g, out);
    if (*co) return cmd_conditions(a, g, out);
    if (*sa) return cmd_sample(a, g, out);
    if (*fi) return cmd_fit(a, g, out);
    if (*se) return cmd_select(a, g, out);
    if (*orc) return cmd_oracle(a, g, out);
    if (*ms) return run_experiment_command(ExperimentKind::stability, a, g, out);
    if (*ma) return run_experiment_command(ExperimentKind::accuracy, a, g, out);
    if (*mr) return run_experiment_command(ExperimentKind::recovery, a, g, out);
    if (*ml) return run_experiment_command(ExperimentKind::gap, a, g, out);
    if (*cv) return run_experiment_command(ExperimentKind::convergence, a, g, out);
  } catch (const BudgetExceeded& e) {
    std::cerr << "budget exceeded: " << e.what() << " (reached " << e.reached() << ")\n";
    return 3;
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
