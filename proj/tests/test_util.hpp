#ifndef STOCHMPS_TEST_UTIL_HPP
#define STOCHMPS_TEST_UTIL_HPP

#include <doctest.h>

#include "stochmps/linalg.hpp"

namespace stochmps::test {

template <typename DerivedA, typename DerivedB>
double max_abs_diff(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  REQUIRE(a.rows() == b.rows());
  REQUIRE(a.cols() == b.cols());
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace stochmps::test

#endif
