#include <gtest/gtest.h>

#include <random>

#include "lcr/errors.hpp"
#include "lcr/params.hpp"

using namespace lcr;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

// Gradient check of `fn` over parameters "a", "b", "c" with the given shapes.
double check(const std::vector<std::pair<Eigen::Index, Eigen::Index>>& shapes,
             const std::function<Var(Binding&)>& fn, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  ParamStore p;
  std::vector<std::string> names;
  const char* labels[] = {"a", "b", "c"};
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    p.set(labels[i], random_matrix(shapes[i].first, shapes[i].second, rng));
    names.emplace_back(labels[i]);
  }
  // Weight the output by a fixed random matrix so every output entry matters.
  Matrix probe;
  const LossBuilder<double> loss = [&](Tape& tape, Binding& bind) {
    Var out = fn(bind);
    if (probe.size() == 0) {
      std::mt19937_64 r2(seed + 100);
      probe = random_matrix(out.rows(), out.cols(), r2);
    }
    return sum(cwise_product(out, tape.constant(probe)));
  };
  return grad_check(p, names, loss).max_rel_error;
}

constexpr double kTol = 1e-7;

}  // namespace

TEST(Kernels, MatmulTransposeAdd) {
  EXPECT_LT(check({{3, 4}, {4, 2}}, [](Binding& b) { return matmul(b("a"), b("b")); }), kTol);
  EXPECT_LT(check({{3, 4}}, [](Binding& b) { return transpose(b("a")); }), kTol);
  EXPECT_LT(check({{3, 4}, {1, 4}}, [](Binding& b) { return b("a") + b("b"); }), kTol);
  EXPECT_LT(check({{3, 4}, {3, 4}}, [](Binding& b) { return b("a") - b("b"); }), kTol);
  EXPECT_LT(check({{2, 3}}, [](Binding& b) { return affine(b("a"), -2.0, 0.5); }), kTol);
  EXPECT_LT(check({{2, 3}, {2, 3}}, [](Binding& b) { return cwise_product(b("a"), b("b")); }), kTol);
}

TEST(Kernels, Nonlinearities) {
  EXPECT_LT(check({{3, 5}}, [](Binding& b) { return relu(b("a")); }), 1e-6);
  EXPECT_LT(check({{3, 5}}, [](Binding& b) { return sigmoid(b("a")); }), kTol);
  EXPECT_LT(check({{3, 5}}, [](Binding& b) { return softmax_rows(b("a")); }), kTol);
  EXPECT_LT(check({{4, 4}}, [](Binding& b) { return softmax_rows(b("a"), true); }), kTol);
  EXPECT_LT(check({{3, 6}, {1, 6}, {1, 6}},
                  [](Binding& b) { return layer_norm_rows(b("a"), b("b"), b("c")); }),
            1e-6);
}

TEST(Kernels, Structural) {
  EXPECT_LT(check({{2, 3}, {1, 3}}, [](Binding& b) { return vstack({b("a"), b("b")}); }), kTol);
  EXPECT_LT(check({{2, 3}, {2, 1}}, [](Binding& b) { return hstack({b("a"), b("b")}); }), kTol);
  EXPECT_LT(check({{4, 3}}, [](Binding& b) { return slice_rows(b("a"), 1, 2); }), kTol);
  EXPECT_LT(check({{4, 3}}, [](Binding& b) { return slice_cols(b("a"), 1, 2); }), kTol);
  EXPECT_LT(check({{4, 3}}, [](Binding& b) { return mean_rows(b("a")); }), kTol);
  const std::vector<int> ids = {2, 0, 2};
  EXPECT_LT(check({{3, 4}}, [&](Binding& b) { return gather_rows(b("a"), std::span<const int>(ids)); }),
            kTol);
}

TEST(Kernels, CrossEntropy) {
  const std::vector<int> tgt = {1, 0, 3};
  const std::vector<double> w = {1.0, 0.0, 0.5};
  EXPECT_LT(check({{3, 4}},
                  [&](Binding& b) {
                    return cross_entropy_rows(b("a"), std::span<const int>(tgt),
                                              std::span<const double>(w));
                  }),
            kTol);
  // Uniform logits over two classes give ln 2 per unit weight.
  Tape tape;
  const Var l = tape.constant(Matrix::Zero(2, 2));
  const std::vector<double> ones = {1.0, 1.0};
  const std::vector<int> t2 = {0, 1};
  EXPECT_NEAR(cross_entropy_rows(l, std::span<const int>(t2), std::span<const double>(ones)).item(),
              2.0 * std::log(2.0), 1e-15);
}

TEST(Kernels, DropoutMaskAndScaling) {
  std::mt19937_64 rng(5);
  Tape tape;
  const Var x = tape.variable(Matrix::Ones(50, 40));
  const Var y = dropout(x, 0.25, rng);
  int zeros = 0;
  for (Eigen::Index i = 0; i < y.value().size(); ++i) {
    const double v = y.value().data()[i];
    if (v == 0.0) ++zeros;
    else EXPECT_DOUBLE_EQ(v, 1.0 / 0.75);
  }
  EXPECT_NEAR(zeros / 2000.0, 0.25, 0.04);
  EXPECT_EQ(dropout(x, 0.0, rng).id(), x.id());
  EXPECT_THROW(dropout(x, 1.0, rng), ArgumentError);
}

TEST(Kernels, ShapeErrors) {
  Tape tape;
  const Var a = tape.variable(Matrix::Zero(2, 3));
  const Var b = tape.variable(Matrix::Zero(2, 3));
  EXPECT_THROW(matmul(a, b), DimensionError);
  EXPECT_THROW(a + tape.constant(Matrix::Zero(3, 3)), DimensionError);
  EXPECT_THROW(a.item(), DimensionError);
}

TEST(Tape, BackwardContracts) {
  Tape t1, t2;
  const Var a = t1.variable(Matrix::Ones(1, 1));
  const Var m = t1.variable(Matrix::Ones(2, 2));
  EXPECT_THROW(t2.backward(a), ContractError);
  EXPECT_THROW(t1.backward(m), ContractError);
}

TEST(Tape, SharedSubexpressionAccumulates) {
  Tape tape;
  const Var x = tape.variable(Matrix::Constant(1, 1, 3.0));
  const Var y = cwise_product(x, x) + x;  // dy/dx = 2x + 1
  tape.backward(y);
  EXPECT_DOUBLE_EQ(x.grad()(0, 0), 7.0);
}

TEST(Tape, ConstantsReceiveNoGradient) {
  Tape tape;
  const Var c = tape.constant(Matrix::Ones(2, 2));
  const Var v = tape.variable(Matrix::Ones(2, 2));
  tape.backward(sum(cwise_product(c, v)));
  EXPECT_FALSE(c.requires_grad());
  EXPECT_EQ(c.grad().norm(), 0.0);
  EXPECT_DOUBLE_EQ(v.grad().sum(), 4.0);
}

TEST(Kernels, FloatInstantiation) {
  BasicTape<float> tape;
  auto a = tape.variable(MatrixX<float>::Ones(2, 2));
  auto s = sum(softmax_rows(a));
  tape.backward(s);
  EXPECT_FLOAT_EQ(s.item(), 2.0f);
}
