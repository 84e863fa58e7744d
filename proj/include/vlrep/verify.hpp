#pragma once

#include <iosfwd>
#include <string>

namespace vlrep {

// One self-contained property/oracle check. `detail` is a short human
// readable summary (counts, max errors, elapsed time).
struct CheckResult {
  bool ok = false;
  std::string name;
  std::string detail;
};

// Angular-margin gradient attenuation: over >= 10^4 seeded random
// configurations, gradient_ratio <= 1 + 1e-12 and the closed-form
// d L / d lambda_ii matches central finite differences.
CheckResult check_theorem1_bounds();

// Case identities on a 100 x 100 (lambda, mu) grid: clamp region has exactly
// zero positive-angle gradient; lambda > pi/2 and mu = 0 reduce bit-for-bit
// to the plain contrastive loss.
CheckResult check_margin_identities();

// meta_update_direct (explicit Jacobian) and meta_update_derived (closed
// form) agree within 1e-8 per coordinate on >= 100 random instances.
CheckResult check_meta_equivalence();

// Constructed aligned/anti-aligned two-sample batch: one meta step at
// alpha*beta = 1e-4 strictly raises the aligned sample's weight and strictly
// lowers the anti-aligned one's, across 50 seeds.
CheckResult check_sign_law();

// Per-sample reverse-mode gradients match central finite differences for
// every parameter on >= 500 random kink-excluded (params, batch) draws.
CheckResult check_per_sample_gradients();

// local_density / distance_index / select_keyframes equal an independent
// O(N^2) brute-force oracle exactly on 500 random instances (N <= 200, K=6,
// Q=12).
CheckResult check_density_oracle();

// Planted-cluster recovery: selection picks exactly one frame per planted
// cluster in >= 95% of 200 trials.
CheckResult check_planted_clusters();

// The caption prompt is byte-identical to the canonical sentence.
CheckResult check_prompt_fidelity();

// Suites as exposed by the CLI. Each prints one "[ok] ..."/"[FAIL] ..." line
// per check to `out` and returns whether every check passed.
bool verify_theorem1(std::ostream& out);
bool verify_metagrad(std::ostream& out);
bool verify_density(std::ostream& out);
bool verify_all(std::ostream& out);

}  // namespace vlrep
