#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "macrobottle/diffcore.hpp"
#include "test_support.hpp"

namespace mb = macrobottle;
namespace diff = macrobottle::diff;
using mb::Index;
using mb::Matrix;
using mb::testing::finite_difference;
using mb::testing::naive_forward;
using mb::testing::random_matrix;
using mb::testing::relative_error;

namespace {

double smooth_loss(diff::Tape& tape, const diff::MlpSpec& spec, diff::ParamStore& store,
                   const Matrix& input, const Matrix& target) {
  tape.clear();
  diff::Var out = diff::mlp_forward(tape, spec, store, "net", tape.constant(input));
  diff::Var err = diff::sub(out, tape.constant(target));
  diff::Var loss = diff::add(diff::mean(diff::square(err)), diff::mean(diff::tanh(out)));
  return loss.scalar();
}

}  // namespace

TEST(MlpForward, IdentitySingleLayer) {
  diff::MlpSpec spec{{2, 2}, diff::Activation::identity};
  diff::ParamStore store;
  store.add("net.W0", Matrix::Identity(2, 2));
  store.add("net.b0", Matrix::Zero(1, 2));
  diff::Tape tape;
  Matrix in(1, 2);
  in << 1, 2;
  diff::Var out = diff::mlp_forward(tape, spec, store, "net", tape.constant(in));
  EXPECT_EQ(out.value(), in);
  EXPECT_EQ(diff::mlp_eval(spec, store, "net", in), in);
}

TEST(MlpForward, ZeroWeightsGiveZeroOutput) {
  diff::MlpSpec spec{{3, 5, 2}};
  diff::ParamStore store;
  mb::Rng rng(3);
  diff::init_mlp(store, "net", spec, rng);
  for (auto& [_, p] : store) p.value.setZero();
  diff::Tape tape;
  diff::Var out = diff::mlp_forward(tape, spec, store, "net", tape.constant(random_matrix(4, 3, rng)));
  EXPECT_TRUE(out.value().isZero(0.0));
}

TEST(MlpForward, MatchesNaiveLoopOracle) {
  mb::Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    diff::MlpSpec spec{{4, 7, 5, 3}};
    diff::ParamStore store;
    diff::init_mlp(store, "net", spec, rng);
    for (auto& [_, p] : store) p.value = random_matrix(p.value.rows(), p.value.cols(), rng);
    const Matrix in = random_matrix(6, 4, rng, -2, 2);
    diff::Tape tape;
    const Matrix got = diff::mlp_forward(tape, spec, store, "net", tape.constant(in)).value();
    const Matrix want = naive_forward(spec, store, "net", in);
    EXPECT_LT((got - want).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((diff::mlp_eval(spec, store, "net", in) - want).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(MlpForward, RejectsShapeMismatch) {
  diff::MlpSpec spec{{3, 2}};
  diff::ParamStore store;
  mb::Rng rng(1);
  diff::init_mlp(store, "net", spec, rng);
  diff::Tape tape;
  EXPECT_THROW(diff::mlp_forward(tape, spec, store, "net", tape.constant(Matrix::Zero(2, 4))),
               mb::DimensionError);
  EXPECT_THROW((diff::MlpSpec{{3}}.validate()), mb::DimensionError);
  EXPECT_THROW((diff::MlpSpec{{3, 0}}.validate()), mb::DimensionError);
}

TEST(Backward, SumOfIdentityNetGivesUnitBiasGradient) {
  diff::MlpSpec spec{{3, 4}, diff::Activation::identity};
  diff::ParamStore store;
  mb::Rng rng(5);
  diff::init_mlp(store, "net", spec, rng);
  diff::Tape tape;
  diff::Var out = diff::mlp_forward(tape, spec, store, "net", tape.constant(random_matrix(1, 3, rng)));
  tape.backward(diff::sum(out));
  EXPECT_EQ(store.at("net.b0").grad, Matrix::Ones(1, 4));
}

TEST(Backward, MatchesCentralFiniteDifferences) {
  mb::Rng rng(21);
  for (int trial = 0; trial < 3; ++trial) {
    diff::MlpSpec spec{{3, 6, 4, 2}};
    diff::ParamStore store;
    diff::init_mlp(store, "net", spec, rng);
    const Matrix in = random_matrix(5, 3, rng);
    const Matrix target = random_matrix(5, 2, rng);
    {
      diff::Tape t2;
      diff::Var out = diff::mlp_forward(t2, spec, store, "net", t2.constant(in));
      diff::Var loss = diff::add(diff::mean(diff::square(diff::sub(out, t2.constant(target)))),
                                 diff::mean(diff::tanh(out)));
      t2.backward(loss);
    }
    for (auto& [name, p] : store) {
      diff::Tape t3;
      const Matrix fd = finite_difference(p, [&] { return smooth_loss(t3, spec, store, in, target); });
      EXPECT_LT(relative_error(p.grad, fd), 1e-4) << name;
    }
  }
}

TEST(Backward, RepeatedBackwardAccumulates) {
  diff::MlpSpec spec{{2, 3, 1}};
  diff::ParamStore store;
  mb::Rng rng(8);
  diff::init_mlp(store, "net", spec, rng);
  diff::Tape tape;
  diff::Var loss = diff::sum(diff::square(
      diff::mlp_forward(tape, spec, store, "net", tape.constant(random_matrix(4, 2, rng)))));
  tape.backward(loss);
  const Matrix once = store.at("net.W0").grad;
  tape.backward(loss);
  EXPECT_EQ(store.at("net.W0").grad, 2.0 * once);
}

TEST(Backward, WithoutForwardIsATapeError) {
  diff::Tape tape;
  diff::Var loss = diff::sum(tape.variable(Matrix::Ones(2, 2)));
  tape.clear();
  EXPECT_THROW(tape.backward(loss), mb::TapeError);
  diff::Var unrecorded;
  EXPECT_THROW(tape.backward(unrecorded), mb::TapeError);
  diff::Tape other;
  diff::Var foreign = diff::sum(other.variable(Matrix::Ones(1, 1)));
  EXPECT_THROW(tape.backward(foreign), mb::TapeError);
  EXPECT_THROW(tape.backward(tape.variable(Matrix::Ones(2, 1))), mb::DimensionError);
}

// Every elementary op against finite differences on random inputs.
TEST(Ops, GradientsMatchFiniteDifferences) {
  mb::Rng rng(99);
  Matrix a = random_matrix(4, 3, rng, 0.5, 1.5);
  Matrix b = random_matrix(4, 3, rng, 0.5, 1.5);
  Matrix r = random_matrix(1, 3, rng);
  Matrix m = random_matrix(3, 2, rng);
  auto build = [&](diff::Tape& t, diff::Var& va, diff::Var& vb, diff::Var& vr, diff::Var& vm) {
    va = t.variable(a);
    vb = t.variable(b);
    vr = t.variable(r);
    vm = t.variable(m);
    diff::Var e = diff::add(diff::mul(va, vb), diff::div(va, vb));
    e = diff::sub(e, diff::scale(diff::exp(diff::scale(vb, 0.3)), 0.7));
    e = diff::add_row(diff::mul_row(diff::tanh(e), vr), vr);
    e = diff::center_cols(diff::clamp(e, -0.9, 5.0));
    e = diff::add_scalar(diff::matmul(e, vm), 0.25);
    diff::Var s = diff::slice_cols(diff::square(e), 1, 1);
    return diff::add(diff::mean(s), diff::sum(diff::square(e)));
  };
  diff::Tape tape;
  diff::Var va, vb, vr, vm;
  tape.backward(build(tape, va, vb, vr, vm));
  const Matrix ga = tape.grad(va), gb = tape.grad(vb), gr = tape.grad(vr), gm = tape.grad(vm);
  auto eval = [&] {
    diff::Tape t;
    diff::Var x1, x2, x3, x4;
    return build(t, x1, x2, x3, x4).scalar();
  };
  EXPECT_LT(relative_error(ga, finite_difference(a, eval)), 1e-4);
  EXPECT_LT(relative_error(gb, finite_difference(b, eval)), 1e-4);
  EXPECT_LT(relative_error(gr, finite_difference(r, eval)), 1e-4);
  EXPECT_LT(relative_error(gm, finite_difference(m, eval)), 1e-4);
}

TEST(Ops, RejectMismatchedShapes) {
  diff::Tape t;
  diff::Var a = t.constant(Matrix::Zero(2, 3));
  diff::Var b = t.constant(Matrix::Zero(3, 2));
  EXPECT_THROW(diff::add(a, b), mb::DimensionError);
  EXPECT_THROW(diff::mul(a, b), mb::DimensionError);
  EXPECT_THROW(diff::matmul(a, a), mb::DimensionError);
  EXPECT_THROW(diff::add_row(a, t.constant(Matrix::Zero(1, 2))), mb::DimensionError);
  EXPECT_THROW(diff::slice_cols(a, 2, 2), mb::DimensionError);
  EXPECT_NO_THROW(diff::matmul(a, b));
}

TEST(Ops, DetachStopsGradient) {
  diff::Tape t;
  diff::Var x = t.variable(Matrix::Constant(1, 1, 2.0));
  diff::Var y = diff::mul(x, diff::detach(x));
  t.backward(y);
  EXPECT_DOUBLE_EQ(t.grad(x)(0, 0), 2.0);
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  diff::ParamStore store;
  mb::Rng rng(4);
  store.add("p", random_matrix(3, 3, rng));
  const Matrix before = store.value("p");
  diff::adam_step(store, 0.1);
  EXPECT_EQ(store.value("p"), before);
  EXPECT_EQ(store.step(), 1);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  diff::ParamStore store;
  store.add("p", Matrix::Zero(1, 1));
  store.at("p").grad(0, 0) = 1.0;
  diff::adam_step(store, 0.1);
  // m_hat = 1, v_hat = 1 after bias correction: p = -0.1 / (1 + 1e-8).
  EXPECT_NEAR(store.value("p")(0, 0), -0.1 / (1.0 + 1e-8), 1e-15);
}

TEST(Adam, ConstantGradientDecreasesMonotonically) {
  diff::ParamStore store;
  store.add("p", Matrix::Constant(1, 1, 5.0));
  double prev = 5.0;
  for (int i = 0; i < 100; ++i) {
    store.at("p").grad(0, 0) = 0.5;
    diff::adam_step(store, 0.01);
    store.zero_grad();
    const double now = store.value("p")(0, 0);
    EXPECT_LT(now, prev);
    prev = now;
  }
  // Constant gradients give an update of exactly lr per step up to epsilon.
  EXPECT_NEAR(prev, 5.0 - 100 * 0.01, 1e-6);
}

TEST(Adam, WeightDecayShrinksTowardZeroWithoutGradient) {
  diff::ParamStore store;
  store.add("p", Matrix::Constant(2, 2, 3.0));
  for (int i = 0; i < 10; ++i) diff::adam_step(store, 0.01, {.weight_decay = 0.5});
  EXPECT_NEAR(store.value("p")(1, 0), 3.0 * std::pow(1.0 - 0.005, 10), 1e-12);
}

TEST(Adam, NonnegativeParametersAreProjected) {
  diff::ParamStore store;
  store.add("w", Matrix::Constant(1, 2, 0.05), /*nonnegative=*/true);
  store.at("w").grad << 1.0, -1.0;
  diff::adam_step(store, 0.1);
  EXPECT_EQ(store.value("w")(0, 0), 0.0);
  EXPECT_GT(store.value("w")(0, 1), 0.05);
}

TEST(Reparam, VeryNegativeLogvarReturnsMean) {
  diff::Tape t;
  mb::Rng rng(2);
  const Matrix mu = random_matrix(3, 2, rng);
  diff::Var z = diff::gaussian_reparam(t.constant(mu), t.constant(Matrix::Constant(3, 2, -1e6)), rng);
  // Clamped at logvar = -20, so the noise scale is exp(-10).
  EXPECT_LT((z.value() - mu).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(Reparam, StandardNormalMoments) {
  diff::Tape t;
  mb::Rng rng(12345);
  const Index n = 100000;
  diff::Var z = diff::gaussian_reparam(t.constant(Matrix::Zero(n, 1)), t.constant(Matrix::Zero(n, 1)), rng);
  const double m = z.value().mean();
  const double sd = std::sqrt((z.value().array() - m).square().sum() / static_cast<double>(n - 1));
  EXPECT_NEAR(m, 0.0, 0.02);
  EXPECT_NEAR(sd, 1.0, 0.02);
}

TEST(Reparam, FixedSeedIsBitIdentical) {
  auto draw = [] {
    diff::Tape t;
    mb::Rng rng(77);
    Matrix mu = Matrix::Constant(5, 3, 0.3);
    Matrix lv = Matrix::Constant(5, 3, -0.7);
    return diff::gaussian_reparam(t.constant(mu), t.constant(lv), rng).value();
  };
  EXPECT_EQ(draw(), draw());
}

TEST(Reparam, GradientsFlowToMeanAndLogvar) {
  mb::Rng seed_rng(31);
  Matrix mu = random_matrix(4, 2, seed_rng);
  Matrix lv = random_matrix(4, 2, seed_rng);
  auto loss = [&](diff::Tape& t, diff::Var& vm, diff::Var& vl) {
    mb::Rng rng(5);
    vm = t.variable(mu);
    vl = t.variable(lv);
    return diff::sum(diff::square(diff::gaussian_reparam(vm, vl, rng)));
  };
  diff::Tape t;
  diff::Var vm, vl;
  t.backward(loss(t, vm, vl));
  auto eval = [&] {
    diff::Tape t2;
    diff::Var a, b;
    return loss(t2, a, b).scalar();
  };
  EXPECT_LT(relative_error(t.grad(vm), finite_difference(mu, eval)), 1e-4);
  EXPECT_LT(relative_error(t.grad(vl), finite_difference(lv, eval)), 1e-4);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  diff::ParamStore store;
  mb::Rng rng(6);
  diff::init_mlp(store, "enc", diff::MlpSpec{{3, 4, 2}}, rng);
  store.add("pos", Matrix::Constant(2, 2, 0.25), true);
  store.value("enc.b0")(0, 1) = 1.0 / 3.0;
  const auto dir = std::filesystem::temp_directory_path() / "macrobottle_ckpt_test";
  std::filesystem::create_directories(dir);
  diff::save_checkpoint(store, dir / "model", {{"note", "x"}});
  diff::Checkpoint cp = diff::load_checkpoint(dir / "model");
  ASSERT_EQ(cp.params.size(), store.size());
  for (const auto& [name, p] : store) {
    EXPECT_EQ(cp.params.value(name), p.value) << name;
    EXPECT_EQ(cp.params.at(name).nonnegative, p.nonnegative);
  }
  EXPECT_EQ(cp.metadata.at("note"), "x");
  EXPECT_THROW(diff::load_checkpoint(dir / "missing"), mb::DataError);
  std::filesystem::remove_all(dir);
}
