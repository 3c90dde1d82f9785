#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "tcomp/tensor.hpp"

using namespace tcomp;

namespace {

FeatureTensor iota_tensor(Dims d) {
  FeatureTensor t(d);
  for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = static_cast<float>(i + 1);
  return t;
}

}  // namespace

TEST_SUITE("tensor") {
  TEST_CASE("unfold of a single entry") {
    const FeatureTensor t({1, 1, 1}, {7.0f});
    for (int mode = 1; mode <= 3; ++mode) {
      const auto m = unfold(t, mode);
      CHECK(m.rows == 1);
      CHECK(m.cols == 1);
      CHECK(m(0, 0) == 7.0);
    }
  }

  TEST_CASE("mode-1 unfolding of 2x2x2 is storage order") {
    const auto m = unfold(iota_tensor({2, 2, 2}), 1);
    REQUIRE(m.rows == 2);
    REQUIRE(m.cols == 4);
    CHECK(std::vector<double>(m.data.begin(), m.data.begin() + 4) == std::vector<double>{1, 2, 3, 4});
  }

  TEST_CASE("unfold shapes") {
    const FeatureTensor t({3, 4, 5});
    CHECK(unfolded_shape(t.dims(), 1) == std::pair<std::size_t, std::size_t>{3, 20});
    CHECK(unfolded_shape(t.dims(), 2) == std::pair<std::size_t, std::size_t>{4, 15});
    CHECK(unfolded_shape(t.dims(), 3) == std::pair<std::size_t, std::size_t>{5, 12});
  }

  TEST_CASE("unfold keeps the entry multiset and matches the index formulas") {
    const auto t = oracle::uniform_tensor({3, 4, 5}, 17);
    auto sorted = std::vector<double>(t.data().begin(), t.data().end());
    std::sort(sorted.begin(), sorted.end());
    for (int mode = 1; mode <= 3; ++mode) {
      const auto m = unfold(t, mode);
      auto got = m.data;
      std::sort(got.begin(), got.end());
      CHECK(got == sorted);
      CHECK(m.data == oracle::unfold(t, mode).a);
    }
  }

  TEST_CASE("fold examples") {
    const ModeMatrix one{3, 1, 1, {3.5}};
    CHECK(fold(one, 3, {1, 1, 1}) == FeatureTensor({1, 1, 1}, {3.5f}));

    ModeMatrix m{1, 2, 4, {1, 2, 3, 4, 5, 6, 7, 8}};
    CHECK(fold(m, 1, {2, 2, 2}) == iota_tensor({2, 2, 2}));
  }

  TEST_CASE("fold(unfold) is the identity on random shapes") {
    std::mt19937_64 g(5);
    std::uniform_int_distribution<std::size_t> ext(1, 8);
    for (int i = 0; i < 120; ++i) {
      const Dims d{ext(g), ext(g), ext(g)};
      const auto t = oracle::uniform_tensor(d, 100 + i, -5, 5);
      for (int mode = 1; mode <= 3; ++mode) {
        const auto m = unfold(t, mode);
        CHECK(fold(m, mode, d) == t);
        const double a = frobenius_norm(m), b = frobenius_norm(t.data());
        CHECK(std::abs(a - b) <= 1e-6 * b);
      }
    }
  }

  TEST_CASE("bad mode and shape mismatch") {
    const FeatureTensor t({2, 3, 4});
    CHECK_THROWS_AS(unfold(t, 0), ContractViolation);
    CHECK_THROWS_AS(unfold(t, 4), ContractViolation);
    auto m = unfold(t, 2);
    CHECK_THROWS_AS(fold(m, 1, t.dims()), ContractViolation);
    CHECK_THROWS_AS(fold(m, 2, {2, 3, 5}), ContractViolation);
  }

  TEST_CASE("masked_fill") {
    const auto t = oracle::uniform_tensor({3, 4, 2}, 3);
    CHECK(masked_fill(t, ObservationMask::all_observed(t.dims()), 9.0f) == t);
    CHECK(masked_fill(t, ObservationMask::all_missing(t.dims()), 0.0f) == FeatureTensor(t.dims()));

    const FeatureTensor small({2, 2, 1}, {1, 2, 3, 4});
    auto mask = ObservationMask::all_observed(small.dims());
    mask.set(1, 0, 0, false);
    mask.set(1, 1, 0, false);
    CHECK(masked_fill(small, mask, 0.0f) == FeatureTensor({2, 2, 1}, {1, 2, 0, 0}));

    CHECK_THROWS_AS(masked_fill(t, ObservationMask::all_observed({3, 4, 3}), 0.0f), ContractViolation);
  }

  TEST_CASE("masked_fill preserves observed entries") {
    for (int i = 0; i < 20; ++i) {
      const auto t = oracle::uniform_tensor({5, 4, 3}, 40 + i);
      const auto mask = oracle::lost_rows_mask(t.dims(), i % 15, 60 + i);
      CHECK(oracle::observed_bitwise_equal(masked_fill(t, mask, -1.0f), t, mask));
    }
  }

  TEST_CASE("masked_mse") {
    const auto t = oracle::uniform_tensor({2, 3, 2}, 8);
    const auto all = ObservationMask::all_observed(t.dims());
    for (auto over : {EntrySubset::observed, EntrySubset::missing, EntrySubset::all}) CHECK(masked_mse(t, t, all, over) == 0.0);

    const Dims d{1, 2, 1};
    const FeatureTensor zeros(d), ones(d, {1, 1});
    CHECK(masked_mse(zeros, ones, ObservationMask::all_observed(d), EntrySubset::all) == 1.0);
    const FeatureTensor a(d, {1, 2}), b(d, {3, 5});
    CHECK(masked_mse(a, b, ObservationMask::all_observed(d), EntrySubset::all) == 6.5);
    CHECK(masked_mse(a, b, ObservationMask::all_observed(d), EntrySubset::missing) == 0.0);
    CHECK_THROWS_AS(masked_mse(a, FeatureTensor({2, 1, 1}), ObservationMask::all_observed(d), EntrySubset::all),
                    ContractViolation);
  }

  TEST_CASE("mask bookkeeping") {
    const Dims d{4, 3, 2};
    auto mask = ObservationMask::all_observed(d);
    CHECK(mask.is_row_structured());
    mask.set(2, 1, 1, false);
    CHECK_FALSE(mask.is_row_structured());
    CHECK(mask.missing_count() == 1);
    mask.set(2, 0, 1, false);
    mask.set(2, 2, 1, false);
    CHECK(mask.is_row_structured());
    CHECK(mask.observed_count() == 21);
    CHECK(mask.digest() != ObservationMask::all_observed(d).digest());
    CHECK_THROWS_AS(ObservationMask(d, std::vector<std::uint8_t>(24, 2)), ContractViolation);
  }

  TEST_CASE("construction guards") {
    CHECK_THROWS_AS(FeatureTensor({0, 1, 1}), ContractViolation);
    CHECK_THROWS_AS(FeatureTensor({1, 1, 2}, {1.0f}), ContractViolation);
    CHECK_THROWS_AS(FeatureTensor({1, 1, 1}, {NAN}), ContractViolation);
  }
}
