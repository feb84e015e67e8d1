#pragma once

// Property checks comparing the library against the oracles. Shared by the
// `axh verify` command and the test binaries.

#include <cstdint>
#include <string>
#include <vector>

#include "axh/blocks.hpp"

namespace axh::verify {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

std::string format(const CheckResult& r);

// algebraic equivalence (64-bit, `trials` random cases each)
CheckResult quaternion_conv_equivalence(std::size_t trials, std::uint64_t seed);
CheckResult vectormap_conv_equivalence(std::size_t trials, std::uint64_t seed);
CheckResult phm_n1_is_affine(std::size_t trials, std::uint64_t seed);
CheckResult phm_hamilton_is_quaternion_dense(std::size_t trials, std::uint64_t seed);
CheckResult kronecker_vec_identity(std::size_t trials, std::uint64_t seed);
CheckResult phm_n5_matches_kron_sum(std::size_t trials, std::uint64_t seed);
CheckResult conv2d_matches_naive(std::size_t trials, std::uint64_t seed);

// gradients (central differences, step 1e-5, 64-bit)
std::vector<CheckResult> layer_gradient_checks(std::uint64_t seed, double tol = 1e-4);
CheckResult end_to_end_gradient(std::uint64_t seed, double tol = 1e-3);

/// Reduced-width axial config used by the gradient and learning checks:
/// widths [12,24,48,96], multipliers [1,1,1,1].
ArchConfig tiny_axial_config(std::size_t side, std::size_t num_classes, std::size_t phm_n);

// structure
CheckResult weight_sharing_cardinality();
CheckResult axial_receptive_field();
CheckResult spatial_ladder();
CheckResult param_ordering();

// cost
CheckResult mac_counter_matches_instrumented(std::uint64_t seed);
CheckResult spatial_flop_ratio();
CheckResult axial_block_fewer_params();

/// Everything above with default sizes.
std::vector<CheckResult> property_suite(std::uint64_t seed = 7);

}  // namespace axh::verify
