#include "axh/checks.hpp"
#include "doctest.h"

using namespace axh::verify;

namespace {

void require_pass(const CheckResult& r) {
  INFO(format(r));
  CHECK(r.passed);
}

}  // namespace

TEST_CASE("conv2d vs nested loops") { require_pass(conv2d_matches_naive(100, 1)); }
TEST_CASE("quaternion conv vs term expansion") { require_pass(quaternion_conv_equivalence(100, 2)); }
TEST_CASE("vectormap conv vs row expansion") { require_pass(vectormap_conv_equivalence(100, 3)); }
TEST_CASE("phm n=1 vs affine") { require_pass(phm_n1_is_affine(100, 4)); }
TEST_CASE("phm hamilton vs quaternion dense") { require_pass(phm_hamilton_is_quaternion_dense(100, 5)); }
TEST_CASE("kronecker vec identity") { require_pass(kronecker_vec_identity(100, 6)); }
TEST_CASE("phm n=5 vs kronecker-sum loop") { require_pass(phm_n5_matches_kron_sum(100, 7)); }

TEST_CASE("layer gradients") {
  for (const auto& r : layer_gradient_checks(8)) require_pass(r);
}

TEST_CASE("end-to-end gradient") { require_pass(end_to_end_gradient(9)); }
TEST_CASE("weight sharing cardinality") { require_pass(weight_sharing_cardinality()); }
TEST_CASE("axial receptive field") { require_pass(axial_receptive_field()); }
TEST_CASE("spatial ladder") { require_pass(spatial_ladder()); }
TEST_CASE("parameter ordering") { require_pass(param_ordering()); }
TEST_CASE("spatial flop ratio") { require_pass(spatial_flop_ratio()); }
TEST_CASE("axial block vs quaternion block params") { require_pass(axial_block_fewer_params()); }
