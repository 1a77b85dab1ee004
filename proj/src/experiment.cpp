#include "heavyica/experiment.hpp"

#include "heavyica/error.hpp"
#include "heavyica/parallel.hpp"
#include "heavyica/random.hpp"

#include <cmath>
#include <limits>
#include <set>

namespace heavyica {

namespace {

void check_keys(const Json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw Error(ErrorKind::configuration, where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& item : obj.items()) {
    if (!ok.count(item.key())) throw Error(ErrorKind::configuration, "unknown key '" + item.key() + "' in " + where);
  }
}

double number(const Json& obj, const char* key, double fallback) {
  if (!obj.contains(key) || obj[key].is_null()) return fallback;
  if (!obj[key].is_number()) throw Error(ErrorKind::configuration, std::string("'") + key + "' must be a number");
  const double v = obj[key].get<double>();
  if (!std::isfinite(v)) throw Error(ErrorKind::configuration, std::string("'") + key + "' must be finite");
  return v;
}

std::size_t count(const Json& obj, const char* key, std::size_t fallback) {
  if (!obj.contains(key) || obj[key].is_null()) return fallback;
  if (!obj[key].is_number_unsigned()) {
    throw Error(ErrorKind::configuration, std::string("'") + key + "' must be a non-negative integer");
  }
  return obj[key].get<std::size_t>();
}

bool flag(const Json& obj, const char* key, bool fallback) {
  if (!obj.contains(key) || obj[key].is_null()) return fallback;
  if (!obj[key].is_boolean()) throw Error(ErrorKind::configuration, std::string("'") + key + "' must be a boolean");
  return obj[key].get<bool>();
}

std::optional<std::filesystem::path> path_of(const Json& obj, const char* key) {
  if (!obj.contains(key) || obj[key].is_null()) return std::nullopt;
  if (!obj[key].is_string()) throw Error(ErrorKind::configuration, std::string("'") + key + "' must be a path string");
  return std::filesystem::path(obj[key].get<std::string>());
}

SourceSpec parse_source(const Json& j) {
  check_keys(j, "source", {"family", "alpha", "scale", "normalize", "symmetric"});
  if (!j.contains("family") || !j["family"].is_string()) throw Error(ErrorKind::configuration, "source needs a family");
  SourceSpec s;
  s.family = parse_source_family(j["family"].get<std::string>());
  s.alpha = number(j, "alpha", s.alpha);
  s.scale = number(j, "scale", s.scale);
  s.normalize = flag(j, "normalize", s.family != SourceFamily::cauchy);
  s.symmetric = flag(j, "symmetric", s.symmetric);
  return s;
}

MixingSpec parse_mixing(const Json& j) {
  MixingSpec m;
  if (j.is_array()) {
    m.kind = MixingSpec::Kind::explicit_matrix;
    m.matrix = matrix_from_json(j);
    return m;
  }
  if (!j.is_string()) throw Error(ErrorKind::configuration, "mixing must be a name or a matrix");
  const std::string name = j.get<std::string>();
  if (name == "identity") {
    m.kind = MixingSpec::Kind::identity;
  } else if (name == "unitary-random") {
    m.kind = MixingSpec::Kind::unitary_random;
  } else if (name.rfind("random-cond(", 0) == 0 && name.back() == ')') {
    m.kind = MixingSpec::Kind::random_cond;
    try {
      m.max_cond = std::stod(name.substr(12, name.size() - 13));
    } catch (const std::exception&) {
      throw Error(ErrorKind::configuration, "cannot read the condition bound in '" + name + "'");
    }
  } else {
    throw Error(ErrorKind::configuration, "unknown mixing '" + name + "'");
  }
  return m;
}

Eigen::MatrixXd mixing_matrix(const ExperimentConfig& c) {
  const auto n = static_cast<Eigen::Index>(c.n);
  const std::uint64_t seed = derive_seed(c.seed, "cli:mixing");
  switch (c.mixing.kind) {
    case MixingSpec::Kind::identity: return Eigen::MatrixXd::Identity(n, n);
    case MixingSpec::Kind::unitary_random: return random_orthogonal(c.n, seed);
    case MixingSpec::Kind::random_cond: return random_unit_column_matrix(c.n, c.mixing.max_cond, seed);
    case MixingSpec::Kind::explicit_matrix: return c.mixing.matrix;
  }
  return {};
}

bool mixing_is_unitary(const ExperimentConfig& c) {
  switch (c.mixing.kind) {
    case MixingSpec::Kind::identity:
    case MixingSpec::Kind::unitary_random: return true;
    case MixingSpec::Kind::random_cond: return false;
    case MixingSpec::Kind::explicit_matrix: {
      const auto& A = c.mixing.matrix;
      return A.rows() == A.cols() &&
             (A.transpose() * A - Eigen::MatrixXd::Identity(A.cols(), A.cols())).cwiseAbs().maxCoeff() <= 1e-9;
    }
  }
  return false;
}

struct Dataset {
  SampleMatrix X;
  std::optional<IcaModel> model;
  std::optional<Eigen::MatrixXd> truth;
  double s_m = 0.0, s_M = 0.0;
};

Dataset load_data(const ExperimentConfig& c) {
  Dataset d;
  if (c.input) {
    d.X = read_csv(*c.input);
    if (static_cast<std::size_t>(d.X.dim()) != c.n) {
      throw Error(ErrorKind::dimension_mismatch, "input CSV has " + std::to_string(d.X.dim()) + " columns, config n = " +
                                                     std::to_string(c.n));
    }
    if (c.truth) {
      const Json side = Json::parse(read_file(*c.truth), nullptr, false);
      if (side.is_discarded() || !side.contains("model") || !side["model"].contains("A")) {
        throw Error(ErrorKind::io, "truth file lacks model.A");
      }
      d.truth = matrix_from_json(side["model"]["A"]);
    }
  } else {
    IcaModel model = build_model(c);
    d.X = mix(model, sample_sources(model.sources, c.N_samples, derive_seed(c.seed, "cli:sources")));
    d.truth = model.A;
    d.model = std::move(model);
  }
  if (d.model) {
    d.s_m = d.model->s_m;
    d.s_M = d.model->s_M;
  } else if (c.s_m && c.s_M) {
    d.s_m = *c.s_m;
    d.s_M = *c.s_M;
  } else if (d.truth) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(*d.truth);
    d.s_M = c.s_M.value_or(svd.singularValues()(0));
    d.s_m = c.s_m.value_or(svd.singularValues()(svd.singularValues().size() - 1));
  } else {
    throw Error(ErrorKind::configuration, "s_m and s_M are required when the data carry no ground truth");
  }
  return d;
}

PipelineConfig make_pipeline(const ExperimentConfig& c, const Dataset& d) {
  PipelineConfig p = c.pipeline;
  const OracleParams radii = centroid_oracle_params(c.n, d.s_m, d.s_M, c.eps, c.delta);
  p.orthogonalize.oracle.eps = c.eps;
  p.orthogonalize.oracle.delta = c.delta;
  p.orthogonalize.oracle.r_inner = radii.r_inner;
  p.orthogonalize.oracle.R_outer = radii.R_outer;
  bool unitary = false;
  if (d.truth) {
    const auto& A = *d.truth;
    unitary = (A.transpose() * A - Eigen::MatrixXd::Identity(A.cols(), A.cols())).cwiseAbs().maxCoeff() <= 1e-9;
  }
  p.skip_orthogonalization = c.skip_orthogonalization.value_or(unitary);
  p.seed = derive_seed(c.seed, "cli:pipeline");
  return p;
}

Json header(const std::string& command, const ExperimentConfig& c, const Dataset* d) {
  Json j;
  j["command"] = command;
  j["status"] = "ok";
  j["seed"] = c.seed;
  j["n"] = c.n;
  j["N_samples"] = d ? static_cast<std::size_t>(d->X.rows()) : c.N_samples;
  j["sample_budget_warning"] = nullptr;
  if (d && d->model) {
    if (auto w = sample_budget_warning(c, *d->model)) j["sample_budget_warning"] = *w;
  }
  return j;
}

void write_report(const RunContext& ctx, const std::string& name, const Json& report) {
  write_file(ctx.out_dir / (name + ".json"), report.dump(2) + "\n", ctx.force);
}

Json match_json(const std::optional<MatchResult>& m) {
  Json j;
  if (!m) {
    j["permutation"] = nullptr;
    j["signs"] = nullptr;
    j["per_column_error"] = nullptr;
    j["amari_index"] = nullptr;
    return j;
  }
  j["permutation"] = m->permutation;
  j["signs"] = m->signs;
  j["per_column_error"] = vector_to_json(m->errors);
  j["amari_index"] = m->amari_index;
  return j;
}

Json oracle_json(const OracleStats& s) {
  return {{"queries", s.queries}, {"evaluations", s.evaluations}, {"budget_exhausted", s.budget_exhausted}};
}

Json walk_json(const WalkDiagnostics& w) { return {{"steps", w.steps}, {"acceptance_rate", w.acceptance_rate()}}; }

Json trials_json(const std::vector<RTrial>& trials) {
  Json a = Json::array();
  for (const auto& t : trials) {
    a.push_back({{"R", t.R}, {"acceptance", t.acceptance}, {"min_abs_cum4", t.min_abs_cum4}, {"accepted", t.accepted}});
  }
  return a;
}

Json moment_json(const MomentBoundReport& r) {
  return {{"bound", r.bound}, {"m4", vector_to_json(r.m4)}, {"cum4", vector_to_json(r.cum4)}, {"holds", r.holds}};
}

Json orthogonality_json(const Eigen::MatrixXd& B, const std::optional<Eigen::MatrixXd>& truth) {
  Json j;
  j["offdiagonal_ratio"] = nullptr;
  j["normalized_eigenvalues"] = nullptr;
  if (truth) {
    j["offdiagonal_ratio"] = offdiagonal_ratio(B, *truth);
    const Eigen::MatrixXd BA = B * *truth;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(BA.transpose() * BA, Eigen::EigenvaluesOnly);
    j["normalized_eigenvalues"] = vector_to_json(eig.eigenvalues() / eig.eigenvalues().maxCoeff());
  }
  return j;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (n == 0) throw Error(ErrorKind::configuration, "n must be >= 1");
  if (sources.size() != n) throw Error(ErrorKind::configuration, "need one source spec per dimension");
  for (const auto& s : sources) s.validate();
  if (mixing.kind == MixingSpec::Kind::explicit_matrix &&
      (static_cast<std::size_t>(mixing.matrix.rows()) != n || static_cast<std::size_t>(mixing.matrix.cols()) != n)) {
    throw Error(ErrorKind::configuration, "explicit mixing matrix must be n x n");
  }
  if (mixing.kind == MixingSpec::Kind::random_cond && !(mixing.max_cond >= 1.0)) {
    throw Error(ErrorKind::configuration, "random-cond bound must be >= 1");
  }
  if (N_samples < 4) throw Error(ErrorKind::configuration, "N_samples must be >= 4");
  MomentBound{M, gamma, eps, delta}.validate();
  if (!(delta < 1.0)) throw Error(ErrorKind::configuration, "delta must lie in (0, 1)");
  if (!(eps > 0.0) || eps > static_cast<double>(n * n)) throw Error(ErrorKind::configuration, "eps must lie in (0, n^2]");
  if (s_m && !(*s_m > 0.0)) throw Error(ErrorKind::configuration, "s_m must be > 0");
  if (s_m && s_M && *s_m > *s_M) throw Error(ErrorKind::configuration, "s_m must not exceed s_M");
  const bool unitary = mixing_is_unitary(*this);
  for (const auto& s : sources) {
    if (!s.has_moment_beyond_first() && (!unitary || skip_orthogonalization == std::optional<bool>(false))) {
      throw Error(ErrorKind::configuration, std::string(to_string(s.family)) +
                                                " sources have no finite (1+gamma) moment; they are only supported "
                                                "with a unitary mixing matrix");
    }
  }
  pipeline.orthogonalize.walk.validate();
  if (pipeline.orthogonalize.body_samples == 0) throw Error(ErrorKind::configuration, "body_samples must be > 0");
  if (pipeline.orthogonalize.oracle.query_budget == 0 || pipeline.orthogonalize.oracle.max_iterations == 0) {
    throw Error(ErrorKind::configuration, "oracle budgets must be positive");
  }
  pipeline.damping.validate();
  pipeline.recovery.validate();
  if (compare_seeds == 0) throw Error(ErrorKind::configuration, "compare.seeds must be >= 1");
}

ExperimentConfig parse_config(const Json& j) {
  check_keys(j, "config",
             {"model", "N_samples", "gamma", "M", "s_m", "s_M", "eps", "delta", "seed", "symmetrize",
              "skip_orthogonalization", "oracle", "walk", "damping", "probe", "input", "truth", "evaluate", "compare"});
  ExperimentConfig c;
  const Json empty = Json::object();
  const Json& model = j.contains("model") ? j["model"] : empty;
  check_keys(model, "model", {"n", "sources", "mixing"});
  c.n = count(model, "n", 2);
  if (model.contains("sources")) {
    const Json& src = model["sources"];
    if (src.is_array()) {
      for (const auto& s : src) c.sources.push_back(parse_source(s));
      if (c.sources.size() == 1) c.sources.resize(c.n, c.sources.front());
    } else {
      c.sources.assign(c.n, parse_source(src));
    }
  } else {
    c.sources.assign(c.n, SourceSpec{SourceFamily::pareto, 1.5});
  }
  if (model.contains("mixing")) c.mixing = parse_mixing(model["mixing"]);

  c.N_samples = count(j, "N_samples", c.N_samples);
  c.gamma = number(j, "gamma", c.gamma);
  c.M = number(j, "M", c.M);
  if (j.contains("s_m") && !j["s_m"].is_null()) c.s_m = number(j, "s_m", 0.0);
  if (j.contains("s_M") && !j["s_M"].is_null()) c.s_M = number(j, "s_M", 0.0);
  c.eps = number(j, "eps", c.eps);
  c.delta = number(j, "delta", c.delta);
  if (j.contains("seed") && !j["seed"].is_null()) {
    if (!j["seed"].is_number_unsigned()) throw Error(ErrorKind::configuration, "'seed' must be an unsigned integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  c.pipeline.symmetrize = flag(j, "symmetrize", true);
  if (j.contains("skip_orthogonalization") && !j["skip_orthogonalization"].is_null()) {
    c.skip_orthogonalization = flag(j, "skip_orthogonalization", false);
  }

  auto& oracle = c.pipeline.orthogonalize.oracle;
  if (j.contains("oracle")) {
    const Json& o = j["oracle"];
    check_keys(o, "oracle", {"n_freeze", "query_budget", "max_iterations"});
    oracle.n_freeze = count(o, "n_freeze", oracle.n_freeze);
    oracle.query_budget = count(o, "query_budget", oracle.query_budget);
    oracle.max_iterations = count(o, "max_iterations", oracle.max_iterations);
  }
  auto& walk = c.pipeline.orthogonalize.walk;
  if (j.contains("walk")) {
    const Json& w = j["walk"];
    check_keys(w, "walk", {"burn_in", "thinning", "chains", "boundary_tol", "stuck_window", "stuck_floor", "body_samples"});
    walk.burn_in = count(w, "burn_in", walk.burn_in);
    walk.thinning = count(w, "thinning", walk.thinning);
    walk.chains = count(w, "chains", walk.chains);
    walk.boundary_tol = number(w, "boundary_tol", walk.boundary_tol);
    walk.stuck_window = count(w, "stuck_window", walk.stuck_window);
    walk.stuck_floor = number(w, "stuck_floor", walk.stuck_floor);
    c.pipeline.orthogonalize.body_samples = count(w, "body_samples", c.pipeline.orthogonalize.body_samples);
  }
  auto& damping = c.pipeline.damping;
  if (j.contains("damping")) {
    const Json& d = j["damping"];
    check_keys(d, "damping", {"R", "C1", "Delta", "start_quantile", "max_doublings", "random_starts"});
    damping.R = number(d, "R", damping.R);
    damping.C1 = number(d, "C1", damping.C1);
    damping.Delta = number(d, "Delta", damping.Delta);
    damping.start_quantile = number(d, "start_quantile", damping.start_quantile);
    damping.max_doublings = count(d, "max_doublings", damping.max_doublings);
    damping.random_starts = count(d, "random_starts", damping.random_starts);
  }
  auto& rec = c.pipeline.recovery;
  if (j.contains("probe")) {
    const Json& p = j["probe"];
    check_keys(p, "probe", {"min_probes", "max_probes", "gap_floor", "phi_floor"});
    rec.min_probes = count(p, "min_probes", rec.min_probes);
    rec.max_probes = count(p, "max_probes", rec.max_probes);
    rec.gap_floor = number(p, "gap_floor", rec.gap_floor);
    rec.psi.phi_floor = number(p, "phi_floor", rec.psi.phi_floor);
  }
  c.input = path_of(j, "input");
  c.truth = path_of(j, "truth");
  if (j.contains("evaluate")) {
    const Json& e = j["evaluate"];
    check_keys(e, "evaluate", {"true_A", "recovered", "report"});
    if (e.contains("true_A")) c.evaluate_true_A = matrix_from_json(e["true_A"]);
    if (e.contains("recovered")) c.evaluate_recovered = matrix_from_json(e["recovered"]).transpose();
    c.evaluate_report = path_of(e, "report");
  }
  if (j.contains("compare")) {
    check_keys(j["compare"], "compare", {"seeds"});
    c.compare_seeds = count(j["compare"], "seeds", c.compare_seeds);
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  const Json j = Json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw Error(ErrorKind::configuration, "config " + path.string() + " is not valid JSON");
  return parse_config(j);
}

IcaModel build_model(const ExperimentConfig& config) {
  IcaModel model = make_model(config.sources, mixing_matrix(config));
  if (config.s_m) model.s_m = *config.s_m;
  if (config.s_M) model.s_M = *config.s_M;
  model.validate();
  return model;
}

std::optional<std::string> sample_budget_warning(const ExperimentConfig& config, const IcaModel& model) {
  const OracleParams p = centroid_oracle_params(config.n, model.s_m, model.s_M, config.eps, config.delta);
  const MomentBound bound{config.M, config.gamma, p.validity_accuracy(), config.delta};
  const std::uint64_t need = required_samples(bound, config.n, model.s_M);
  if (config.N_samples >= need) return std::nullopt;
  const std::string need_text =
      need == std::numeric_limits<std::uint64_t>::max() ? std::string("2^64") : std::to_string(need);
  return "N_samples = " + std::to_string(config.N_samples) + " is below the advisory moment bound " + need_text +
         "; proceeding";
}

Json cmd_generate(const ExperimentConfig& config, const RunContext& ctx) {
  const IcaModel model = build_model(config);
  const std::uint64_t source_seed = derive_seed(config.seed, "cli:sources");
  SampleMatrix X = mix(model, sample_sources(model.sources, config.N_samples, source_seed));
  X.model_id = "generate";
  const auto csv = ctx.out_dir / "samples.csv";
  const auto side = ctx.out_dir / "samples.json";
  if (!ctx.force && (std::filesystem::exists(csv) || std::filesystem::exists(side))) {
    throw Error(ErrorKind::io, "output files exist in " + ctx.out_dir.string() + "; pass --force to overwrite");
  }
  Json sources = Json::array();
  for (const auto& s : model.sources) {
    sources.push_back({{"family", to_string(s.family)},
                       {"alpha", s.alpha},
                       {"scale", s.scale},
                       {"normalize", s.normalize},
                       {"symmetric", s.symmetric}});
  }
  Json report = header("generate", config, nullptr);
  report["model"] = {{"n", model.n}, {"sources", sources}, {"A", matrix_to_json(model.A)}, {"s_m", model.s_m},
                     {"s_M", model.s_M}};
  report["seeds"] = {{"root", config.seed}, {"mixing", derive_seed(config.seed, "cli:mixing")}, {"sources", source_seed}};
  if (auto w = sample_budget_warning(config, model)) report["sample_budget_warning"] = *w;
  report["csv"] = csv.string();
  write_csv(csv, X, true);
  write_file(side, report.dump(2) + "\n", true);
  return report;
}

Json cmd_orthogonalize(const ExperimentConfig& config, const RunContext& ctx) {
  const Dataset d = load_data(config);
  const PipelineConfig p = make_pipeline(config, d);
  Json report = header("orthogonalize", config, &d);
  try {
    SampleMatrix X = d.X;
    if (p.symmetrize) {
      if (X.rows() % 2) X.data.conservativeResize(X.rows() - 1, Eigen::NoChange);
      X = symmetrize(X);
    }
    OrthogonalizeConfig oc = p.orthogonalize;
    oc.seed = derive_seed(p.seed, "pipeline:orthogonalize");
    if (p.symmetrize) oc.oracle.R_outer *= 2.0;
    const OrthogonalizeResult r = orthogonalize(X, oc);
    report["B"] = matrix_to_json(r.orthogonalizer.B);
    report["Sigma_hat"] = matrix_to_json(r.orthogonalizer.provenance.Sigma_hat);
    report["eps_c"] = r.orthogonalizer.provenance.eps_c;
    report["body_samples"] = r.orthogonalizer.provenance.samples;
    report["walk"] = walk_json(r.orthogonalizer.provenance.walk);
    report["oracle"] = oracle_json(r.oracle_stats);
    report.update(orthogonality_json(r.orthogonalizer.B, d.truth));
    report["output_csv"] = (ctx.out_dir / "orthogonalized.csv").string();
    write_csv(ctx.out_dir / "orthogonalized.csv", r.transformed, ctx.force);
  } catch (const Error& e) {
    throw e.stage().empty() ? e.with_stage("orthogonalize") : e;
  }
  write_report(ctx, "orthogonalize", report);
  return report;
}

Json cmd_damp(const ExperimentConfig& config, const RunContext& ctx) {
  const Dataset d = load_data(config);
  const PipelineConfig p = make_pipeline(config, d);
  Json report = header("damp", config, &d);
  try {
    DampingParams dp = p.damping;
    dp.seed = derive_seed(p.seed, "pipeline:select_R");
    std::vector<RTrial> trials;
    if (dp.R == 0.0) {
      RSelection sel = select_R(d.X, dp);
      trials = sel.trials;
      dp = sel.params;
    }
    const DampedBatch batch = damp(d.X, dp.R, derive_seed(p.seed, "pipeline:damp"));
    report["R"] = batch.R;
    report["acceptance_rate"] = batch.acceptance_rate;
    report["acceptance_estimate"] = acceptance_estimate(d.X, batch.R);
    report["attempted"] = batch.attempted;
    report["accepted"] = static_cast<std::size_t>(batch.accepted.rows());
    report["R_trials"] = trials_json(trials);
    report["moment_bound"] = moment_json(damped_cum4_bound_check(batch, dp.C1));
    report["output_csv"] = (ctx.out_dir / "damped.csv").string();
    write_csv(ctx.out_dir / "damped.csv", batch.accepted, ctx.force);
  } catch (const Error& e) {
    throw e.stage().empty() ? e.with_stage("damp") : e;
  }
  write_report(ctx, "damp", report);
  return report;
}

Json cmd_recover(const ExperimentConfig& config, const RunContext& ctx) {
  const Dataset d = load_data(config);
  const PipelineConfig p = make_pipeline(config, d);
  Json report = header("recover", config, &d);
  try {
    RecoveryParams rp = p.recovery;
    rp.seed = derive_seed(p.seed, "pipeline:recover");
    const UnitaryRecovery r = recover_unitary(d.X, rp);
    report["recovered_columns"] = columns_to_json(r.vectors);
    report["eigenvalues"] = vector_to_json(r.eigenvalues);
    report["eigen_gap"] = r.gap;
    report["probe"] = vector_to_json(r.probe);
    report["probes_tried"] = r.probes_tried;
    report["probe_gaps"] = r.gaps;
    report["psi_max_imag"] = r.max_imag;
    std::optional<MatchResult> m;
    if (d.truth) m = match_and_score(*d.truth, r.vectors);
    report.update(match_json(m));
  } catch (const Error& e) {
    throw e.stage().empty() ? e.with_stage("recover") : e;
  }
  write_report(ctx, "recover", report);
  return report;
}

Json cmd_pipeline(const ExperimentConfig& config, const RunContext& ctx) {
  const Dataset d = load_data(config);
  const PipelineConfig p = make_pipeline(config, d);
  const RecoveryResult r = run_pipeline(d.X, p, d.truth);
  const auto& g = r.diagnostics;
  Json report = header("pipeline", config, &d);
  report["skip_orthogonalization"] = p.skip_orthogonalization;
  report["B"] = matrix_to_json(r.B);
  report["Sigma_hat"] = g.Sigma_hat.size() ? matrix_to_json(g.Sigma_hat) : Json(nullptr);
  report["recovered_columns"] = columns_to_json(r.recovered_columns);
  report.update(match_json(r.match));
  report.update(orthogonality_json(r.B, d.truth));
  report["diagnostics"] = {{"raw_samples", g.raw_samples},
                           {"symmetrized_samples", g.symmetrized_samples},
                           {"oracle", oracle_json(g.oracle)},
                           {"walk", walk_json(g.walk)},
                           {"R", g.R},
                           {"R_trials", trials_json(g.R_trials)},
                           {"acceptance_rate", g.acceptance_rate},
                           {"damped_samples", g.damped_samples},
                           {"moment_bound", moment_json(g.moment_bound)},
                           {"eigen_gap", g.eigen_gap},
                           {"probe_gaps", g.probe_gaps},
                           {"probe", vector_to_json(g.probe)},
                           {"psi_max_imag", g.psi_max_imag}};
  write_report(ctx, "pipeline", report);
  return report;
}

Json cmd_evaluate(const ExperimentConfig& config, const RunContext& ctx) {
  Json report = header("evaluate", config, nullptr);
  MatchResult m;
  try {
    Eigen::MatrixXd truth;
    if (config.evaluate_true_A) {
      truth = *config.evaluate_true_A;
    } else if (config.truth) {
      const Json side = Json::parse(read_file(*config.truth), nullptr, false);
      if (side.is_discarded() || !side.contains("model")) throw Error(ErrorKind::io, "truth file lacks model.A");
      truth = matrix_from_json(side["model"]["A"]);
    } else {
      truth = build_model(config).A;
    }
    Eigen::MatrixXd recovered;
    if (config.evaluate_recovered) {
      recovered = *config.evaluate_recovered;
    } else if (config.evaluate_report) {
      const Json rep = Json::parse(read_file(*config.evaluate_report), nullptr, false);
      if (rep.is_discarded() || !rep.contains("recovered_columns")) {
        throw Error(ErrorKind::io, "report lacks recovered_columns");
      }
      recovered = matrix_from_json(rep["recovered_columns"]).transpose();
    } else {
      throw Error(ErrorKind::configuration, "evaluate needs evaluate.recovered or evaluate.report");
    }
    m = match_and_score(truth, recovered);
  } catch (const Error& e) {
    throw e.stage().empty() ? e.with_stage("evaluate") : e;
  }
  report.update(match_json(m));
  write_report(ctx, "evaluate", report);
  return report;
}

Json cmd_compare_baseline(const ExperimentConfig& config, const RunContext& ctx) {
  if (config.input) throw Error(ErrorKind::configuration, "compare-baseline synthesizes its own data; drop 'input'", "compare");
  struct Row {
    std::uint64_t seed = 0;
    double centroid = 0.0, whitening = 0.0;
  };
  std::vector<Row> rows(config.compare_seeds);
  try {
    parallel_chunks(config.compare_seeds, 1, [&](std::size_t k, std::size_t, std::size_t) {
      ExperimentConfig c = config;
      c.seed = derive_seed(config.seed, "cli:compare", k);
      const Dataset d = load_data(c);
      const PipelineConfig p = make_pipeline(c, d);
      SampleMatrix X = d.X;
      if (X.rows() % 2) X.data.conservativeResize(X.rows() - 1, Eigen::NoChange);
      X = symmetrize(X);
      OrthogonalizeConfig oc = p.orthogonalize;
      oc.seed = derive_seed(p.seed, "pipeline:orthogonalize");
      oc.oracle.R_outer *= 2.0;
      const OrthogonalizeResult r = orthogonalize(X, oc);
      rows[k] = {c.seed, offdiagonal_ratio(r.orthogonalizer.B, *d.truth),
                 offdiagonal_ratio(baseline_whitening(X).B, *d.truth)};
    });
  } catch (const Error& e) {
    throw e.stage().empty() ? e.with_stage("compare") : e;
  }
  Json report = header("compare-baseline", config, nullptr);
  {
    const IcaModel model = build_model(config);
    if (auto w = sample_budget_warning(config, model)) report["sample_budget_warning"] = *w;
  }
  Json per_seed = Json::array();
  std::size_t wins = 0;
  for (const auto& r : rows) {
    const bool win = r.centroid < r.whitening;
    wins += win;
    per_seed.push_back(
        {{"seed", r.seed}, {"centroid_offdiagonal", r.centroid}, {"whitening_offdiagonal", r.whitening}, {"centroid_wins", win}});
  }
  report["metric"] = "offdiagonal_ratio";
  report["seeds"] = per_seed;
  report["centroid_wins"] = wins;
  report["total"] = rows.size();
  write_report(ctx, "compare-baseline", report);
  return report;
}

Json error_report(const std::string& command, const Error& error) {
  Json j;
  j["command"] = command;
  j["status"] = "error";
  j["stage"] = error.stage().empty() ? command : error.stage();
  j["error_kind"] = to_string(error.kind());
  j["message"] = error.what();
  return j;
}

}  // namespace heavyica
