#include "pcs/simulation.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "pcs/csv.hpp"
#include "pcs/errors.hpp"
#include "pcs/estimation.hpp"
#include "pcs/rng.hpp"
#include "pcs/special.hpp"
#include "pcs/threads.hpp"

namespace pcs {

namespace {

double phi(double t, double span) { return -0.5 + 2.0 * std::abs(t - span / 2.0) / span; }

double phi2(double t, double span) { return -2.0 + 8.0 * std::abs(t - span / 2.0) / span; }

std::vector<Eigen::MatrixXd> design_effects(DesignKind kind, int T) {
  const int half = (T + 1) / 2;  // smallest integer >= T/2
  std::vector<Eigen::MatrixXd> alpha(kind == DesignKind::heteroscedastic_2G ? 2 : 3);
  for (auto& a : alpha) a.resize(T, 1);
  for (int t = 1; t <= T; ++t) {
    const int row = t - 1;
    switch (kind) {
      case DesignKind::homoscedastic_A:
        alpha[0](row, 0) = 0.0;
        alpha[1](row, 0) = phi(t, T) + 1.0;
        alpha[2](row, 0) = phi(t % half, T / 2.0) - 1.0;
        break;
      case DesignKind::homoscedastic_B:
        alpha[0](row, 0) = 0.0;
        alpha[1](row, 0) = phi2(t, T);
        alpha[2](row, 0) = phi2(t % half, T / 2.0);
        break;
      case DesignKind::heteroscedastic_2G:
        alpha[0](row, 0) = 0.5;
        alpha[1](row, 0) = -0.5;
        break;
    }
  }
  return alpha;
}

}  // namespace

const char* design_name(DesignKind kind) {
  switch (kind) {
    case DesignKind::homoscedastic_A: return "homoscedastic_A";
    case DesignKind::homoscedastic_B: return "homoscedastic_B";
    case DesignKind::heteroscedastic_2G: return "heteroscedastic_2G";
  }
  throw DomainError("unknown design kind");
}

DesignKind design_from_string(const std::string& name) {
  if (name == "homoscedastic_A" || name == "a" || name == "A")
    return DesignKind::homoscedastic_A;
  if (name == "homoscedastic_B" || name == "b" || name == "B")
    return DesignKind::homoscedastic_B;
  if (name == "heteroscedastic_2G" || name == "het" || name == "HET")
    return DesignKind::heteroscedastic_2G;
  throw DomainError("unknown design: " + name);
}

DesignDraw make_design(const DesignSpec& spec) {
  if (spec.n_units < 1) throw DomainError("n_units must be positive");
  if (spec.n_periods < 2) throw DomainError("n_periods must be at least 2");
  if (!(spec.sigma > 0.0)) throw DomainError("sigma must be positive");
  const bool het = spec.kind == DesignKind::heteroscedastic_2G;
  const int G = het ? 2 : 3;
  if (!het && (spec.g0 < 1 || spec.g0 > G)) throw DomainError("g0 out of range");
  if (het && !(spec.high_noise_prob >= 0.0 && spec.high_noise_prob <= 1.0))
    throw DomainError("high_noise_prob out of range");

  const int N = spec.n_units;
  const int T = spec.n_periods;
  DesignDraw draw;
  draw.model.n_groups = G;
  draw.model.time_constant = het;
  draw.model.coefficients = design_effects(spec.kind, T);
  draw.model.assignment.assign(N, het ? 0 : spec.g0 - 1);

  draw.panel.n_units = N;
  draw.panel.n_periods = T;
  draw.panel.covariate_dim = 1;
  draw.panel.outcomes.resize(N, T);
  draw.panel.covariates.assign(N, Eigen::MatrixXd::Ones(T, 1));
  for (int i = 0; i < N; ++i) draw.panel.unit_labels.push_back(std::to_string(i + 1));
  for (int t = 0; t < T; ++t) draw.panel.time_labels.push_back(std::to_string(t + 1));
  if (het) draw.noise_type.assign(N, 0);

  SplitMix64 rng(spec.seed);
  const double base_sd = spec.sigma * std::sqrt(static_cast<double>(T));
  for (int i = 0; i < N; ++i) {
    double sd = base_sd;
    if (het) {
      draw.noise_type[i] = rng.uniform01() < spec.high_noise_prob ? 1 : 0;
      if (!draw.noise_type[i]) sd = base_sd / 5.0;
    }
    const auto& alpha = draw.model.coefficients[draw.model.assignment[i]];
    for (int t = 0; t < T; ++t)
      draw.panel.outcomes(i, t) = alpha(t, 0) + sd * norm_quantile(rng.uniform01());
  }
  return draw;
}

namespace {

struct RepStats {
  std::vector<char> cover;
  std::vector<double> card;
  std::vector<double> nhat;
  std::vector<int> power_num;
  int power_den = 0;
  char naive = 0;
};

double binomial_se(double p, double n) {
  return n > 0.0 ? std::sqrt(p * (1.0 - p) / n) : 0.0;
}

}  // namespace

CoverageTable run_study(const DesignSpec& spec, const std::vector<Method>& methods,
                        double alpha, double beta, int reps,
                        std::uint64_t master_seed, const QmcConfig& qmc,
                        const InferenceOptions& opts) {
  if (reps < 1) throw DomainError("reps must be at least 1");
  if (methods.empty()) throw DomainError("no methods requested");
  const std::size_t M = methods.size();
  const bool het = spec.kind == DesignKind::heteroscedastic_2G;

  std::vector<RepStats> slots(reps);
  std::vector<std::exception_ptr> failures(reps);
  InferenceOptions unit_opts = opts;
  unit_opts.threads = 1;

  parallel_for(static_cast<std::size_t>(reps), opts.threads, [&](std::size_t r) {
    try {
      DesignSpec rep_spec = spec;
      rep_spec.seed = mix_seed(master_seed, r);
      DesignDraw draw = make_design(rep_spec);
      GroupModel fitted = assign_groups(draw.panel, draw.model);
      RepStats stats;
      stats.naive = fitted.assignment == draw.model.assignment;
      stats.cover.resize(M);
      stats.card.resize(M);
      stats.nhat.resize(M);
      stats.power_num.assign(M, 0);
      if (het)
        for (int type : draw.noise_type) stats.power_den += type;
      for (std::size_t m = 0; m < M; ++m) {
        auto sel = unit_selection_cs(draw.panel, fitted, alpha, beta, methods[m],
                                     qmc, unit_opts);
        stats.cover[m] = sel.covers(draw.model.assignment);
        double card = 0.0;
        for (const auto& u : sel.per_unit) card += static_cast<double>(u.groups.size());
        stats.card[m] = card / spec.n_units;
        stats.nhat[m] = static_cast<double>(sel.n_selected) / spec.n_units;
        if (het)
          for (int i = 0; i < spec.n_units; ++i)
            if (draw.noise_type[i] && sel.per_unit[i].groups.size() == 1)
              ++stats.power_num[m];
      }
      slots[r] = std::move(stats);
    } catch (...) {
      failures[r] = std::current_exception();
    }
  });

  for (int r = 0; r < reps; ++r)
    if (failures[r]) std::rethrow_exception(failures[r]);

  CoverageTable table;
  for (std::size_t m = 0; m < M; ++m) {
    CoverageRow row;
    row.design = design_name(spec.kind);
    row.method = methods[m];
    row.alpha = alpha;
    row.beta = beta;
    row.n_periods = spec.n_periods;
    row.sigma = spec.sigma;
    row.reps = reps;
    long cover = 0, naive = 0, power_num = 0, power_den = 0;
    double card = 0.0, nhat = 0.0;
    for (int r = 0; r < reps; ++r) {
      cover += slots[r].cover[m];
      naive += slots[r].naive;
      card += slots[r].card[m];
      nhat += slots[r].nhat[m];
      power_num += slots[r].power_num[m];
      power_den += slots[r].power_den;
    }
    row.coverage = static_cast<double>(cover) / reps;
    row.coverage_se = binomial_se(row.coverage, reps);
    row.naive_coverage = static_cast<double>(naive) / reps;
    row.naive_se = binomial_se(row.naive_coverage, reps);
    row.cardinality = card / reps;
    row.nhat_frac = nhat / reps;
    if (het && power_den > 0) {
      row.power = static_cast<double>(power_num) / static_cast<double>(power_den);
      row.power_se = binomial_se(row.power, static_cast<double>(power_den));
    } else {
      row.power = std::numeric_limits<double>::quiet_NaN();
      row.power_se = std::numeric_limits<double>::quiet_NaN();
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

void save_coverage_csv(const std::string& path, const CoverageTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open " + path + " for writing");
  out << "design,method,alpha,beta,t,sigma,reps,coverage,coverage_se,cardinality,"
         "naive,naive_se,power,power_se,nhat_frac\n";
  for (const auto& r : table.rows) {
    out << r.design << ',' << method_name(r.method) << ',' << format_double(r.alpha)
        << ',' << format_double(r.beta) << ',' << r.n_periods << ','
        << format_double(r.sigma) << ',' << r.reps << ',' << format_double(r.coverage)
        << ',' << format_double(r.coverage_se) << ',' << format_double(r.cardinality)
        << ',' << format_double(r.naive_coverage) << ',' << format_double(r.naive_se)
        << ',' << format_double(r.power) << ',' << format_double(r.power_se) << ','
        << format_double(r.nhat_frac) << '\n';
  }
  if (!out) throw ParseError("failed writing " + path);
}

}  // namespace pcs
