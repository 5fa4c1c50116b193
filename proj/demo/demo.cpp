// Approximates u(y) = exp(0.75 y1 + 0.375 y2) on [-1,1]^2 from random
// samples: selects the best downward closed set of 5 indices, compares it
// with the greedy choice and with the best 5-term L2 approximation.

#include <cstdio>

#include "dcls/dcls.hpp"

int main() {
  using namespace dcls;
  const auto p = JacobiParams::legendre();
  const std::size_t n = 5, d = 2;

  TestFunction u = make_test_function("exp_sum", d);

  ConditionSpec spec = ConditionSpec::for_params(ConditionKind::enc2_dc, 2 * n - 1, d, 1.0, p);
  const std::size_t m = min_sample_size(spec).m;
  SampleSet samples = draw_samples(p, d, m, 2024);
  auto b = evaluate_at_samples(u.f, samples);

  auto best = exhaustive_select(Family::downward_closed, n, p, samples, b);
  auto greedy = greedy_select(Family::downward_closed, n, p, samples, b);
  auto oracle = best_n_term_oracle(Family::downward_closed, n, p, u.f, d, 30);

  std::printf("m = %zu samples, %llu candidate sets\n", m, static_cast<unsigned long long>(best.sets_examined));
  std::printf("exhaustive: %s  L2 error %.3e\n", format_set(best.chosen_set, d).c_str(),
              l2_error(p, u.f, best.fit.as_function(), d, 30));
  std::printf("greedy:     %s  L2 error %.3e\n", format_set(greedy.chosen_set, d).c_str(),
              l2_error(p, u.f, greedy.fit.as_function(), d, 30));
  std::printf("oracle:     %s  sigma_n  %.3e\n", format_set(oracle.optimal_set, d).c_str(), oracle.sigma_n);
  std::printf("Gramian spectrum on the chosen set: [%.3f, %.3f]\n", best.fit.gramian_min_eig, best.fit.gramian_max_eig);
  return 0;
}
