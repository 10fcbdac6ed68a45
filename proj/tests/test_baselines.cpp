#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "streamlda/baselines.hpp"
#include "streamlda/class_means.hpp"
#include "streamlda/errors.hpp"
#include "streamlda/tolerances.hpp"

using namespace streamlda;

namespace {

Eigen::MatrixXd random_batch(std::mt19937_64& gen, int n, int d) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd batch(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) batch(i, j) = normal(gen);
  return batch;
}

std::vector<std::int32_t> random_labels(std::mt19937_64& gen, int n, int k) {
  std::vector<std::int32_t> labels(static_cast<std::size_t>(n));
  for (auto& y : labels) y = static_cast<std::int32_t>(gen() % k);
  return labels;
}

}  // namespace

TEST_CASE("single softmax step from zero matches the hand computation") {
  SoftmaxReadout readout(2, 2, SgdOptions{0.1, 0.0, 0.0});
  Eigen::MatrixXd batch(1, 2);
  batch << 1.0, 0.0;
  readout.sgd_step(batch, std::vector<std::int32_t>{0});

  Eigen::MatrixXd expected_w(2, 2);
  expected_w << 0.05, 0.0, -0.05, 0.0;
  CHECK(readout.weights() == expected_w);
  CHECK(readout.bias()(0) == 0.05);
  CHECK(readout.bias()(1) == -0.05);
}

TEST_CASE("zero learning rate leaves the readout untouched") {
  SoftmaxReadout readout(3, 2, SgdOptions{0.0, 0.9, 1e-4});
  Eigen::MatrixXd batch(2, 3);
  batch << 1.0, 2.0, 3.0, -1.0, 0.0, 1.0;
  readout.sgd_step(batch, std::vector<std::int32_t>{0, 1});
  CHECK(readout.weights() == Eigen::MatrixXd::Zero(2, 3));
  CHECK(readout.bias() == Eigen::VectorXd::Zero(2));
}

TEST_CASE("analytic softmax gradient matches central finite differences") {
  std::mt19937_64 gen(606);
  for (int rep = 0; rep < 50; ++rep) {
    const int d = 2 + static_cast<int>(gen() % 4);
    const int k = 2 + static_cast<int>(gen() % 4);
    const int n = 1 + static_cast<int>(gen() % 6);
    const double wd = rep % 2 == 0 ? 0.0 : 1e-2;
    const double lr = 0.25;

    SoftmaxReadout readout(d, k, SgdOptions{lr, 0.0, wd});
    // wander away from zero so the check runs at a generic point
    for (int warm = 0; warm < 3; ++warm) {
      readout.sgd_step(random_batch(gen, 4, d), random_labels(gen, 4, k));
    }

    const Eigen::MatrixXd batch = random_batch(gen, n, d);
    const std::vector<std::int32_t> labels = random_labels(gen, n, k);
    const Eigen::MatrixXd w0 = readout.weights();
    const Eigen::VectorXd b0 = readout.bias();
    readout.sgd_step(batch, labels);
    const Eigen::MatrixXd grad_w = (w0 - readout.weights()) / lr;
    const Eigen::VectorXd grad_b = (b0 - readout.bias()) / lr;

    const double h = 1e-5;
    double worst = 0.0;
    for (int r = 0; r < k; ++r) {
      for (int c = 0; c < d; ++c) {
        Eigen::MatrixXd wp = w0;
        Eigen::MatrixXd wm = w0;
        wp(r, c) += h;
        wm(r, c) -= h;
        const double fd = (oracles::softmax_loss(wp, b0, batch, labels, wd) -
                           oracles::softmax_loss(wm, b0, batch, labels, wd)) /
                          (2.0 * h);
        worst = std::max(worst, std::abs(grad_w(r, c) - fd) /
                                    std::max(1.0, std::abs(fd)));
      }
      Eigen::VectorXd bp = b0;
      Eigen::VectorXd bm = b0;
      bp(r) += h;
      bm(r) -= h;
      const double fd = (oracles::softmax_loss(w0, bp, batch, labels, wd) -
                         oracles::softmax_loss(w0, bm, batch, labels, wd)) /
                        (2.0 * h);
      worst = std::max(worst, std::abs(grad_b(r) - fd) / std::max(1.0, std::abs(fd)));
    }
    CHECK(worst < tol::kGradientCheck);
  }
}

TEST_CASE("momentum accumulates across steps") {
  SoftmaxReadout readout(2, 2, SgdOptions{0.1, 0.9, 0.0});
  Eigen::MatrixXd batch(1, 2);
  batch << 1.0, 0.0;
  const std::vector<std::int32_t> labels{0};
  readout.sgd_step(batch, labels);
  const double first_step = readout.weights()(0, 0);
  readout.sgd_step(batch, labels);
  // second velocity = 0.9 * g1 + g2 with |g2| < |g1| but the sum well above g2
  CHECK(readout.weights()(0, 0) - first_step > first_step * 1.2);
  CHECK(readout.velocity_weights()(0, 0) != 0.0);
}

TEST_CASE("softmax step validates its batch") {
  SoftmaxReadout readout(2, 2, SgdOptions{});
  Eigen::MatrixXd empty(0, 2);
  CHECK_THROWS_AS(readout.sgd_step(empty, std::vector<std::int32_t>{}), EmptyBatch);
  Eigen::MatrixXd batch(1, 2);
  batch << 1.0, 0.0;
  CHECK_THROWS_AS(readout.sgd_step(batch, std::vector<std::int32_t>{0, 1}),
                  LengthMismatch);
  CHECK_THROWS_AS(readout.sgd_step(batch, std::vector<std::int32_t>{5}),
                  LabelOutOfRange);
  Eigen::MatrixXd wide(1, 3);
  wide << 1.0, 0.0, 0.0;
  CHECK_THROWS_AS(readout.sgd_step(wide, std::vector<std::int32_t>{0}),
                  DimensionMismatch);
}

TEST_CASE("buffer merges the closest pair when over capacity") {
  PrototypeBuffer buffer(2, 1, 2);
  buffer.insert(Eigen::Vector2d(0.0, 0.0), 0);
  buffer.insert(Eigen::Vector2d(10.0, 10.0), 0);
  buffer.insert(Eigen::Vector2d(0.5, 0.0), 0);

  const auto& protos = buffer.class_buffer(0);
  REQUIRE(protos.size() == 2);
  CHECK(protos[0].vector == Eigen::Vector2d(0.25, 0.0));
  CHECK(protos[0].count == 2);
  CHECK(protos[1].vector == Eigen::Vector2d(10.0, 10.0));
  CHECK(protos[1].count == 1);
}

TEST_CASE("distance ties merge the earliest inserted pair") {
  PrototypeBuffer buffer(2, 1, 2);
  buffer.insert(Eigen::Vector2d(0.0, 0.0), 0);
  buffer.insert(Eigen::Vector2d(1.0, 0.0), 0);
  buffer.insert(Eigen::Vector2d(2.0, 0.0), 0);
  // pairs (0,1) and (1,2) are both at distance 1; lexicographic order wins
  const auto& protos = buffer.class_buffer(0);
  REQUIRE(protos.size() == 2);
  CHECK(protos[0].vector == Eigen::Vector2d(0.5, 0.0));
  CHECK(protos[0].count == 2);
  CHECK(protos[1].vector == Eigen::Vector2d(2.0, 0.0));
}

TEST_CASE("capacity one collapses everything into one prototype") {
  PrototypeBuffer buffer(2, 1, 1);
  buffer.insert(Eigen::Vector2d(1.0, 3.0), 0);
  buffer.insert(Eigen::Vector2d(3.0, 5.0), 0);
  const auto& protos = buffer.class_buffer(0);
  REQUIRE(protos.size() == 1);
  CHECK(protos[0].vector == Eigen::Vector2d(2.0, 4.0));
  CHECK(protos[0].count == 2);
}

TEST_CASE("buffer below capacity stores samples verbatim") {
  PrototypeBuffer buffer(2, 2, 10);
  std::vector<Eigen::Vector2d> inserted;
  for (int i = 0; i < 7; ++i) {
    inserted.emplace_back(static_cast<double>(i), static_cast<double>(-i));
    buffer.insert(inserted.back(), i % 2);
  }
  CHECK(buffer.total_prototypes() == 7);
  for (int i = 0; i < 7; ++i) {
    const auto& protos = buffer.class_buffer(i % 2);
    const Prototype& p = protos[static_cast<std::size_t>(i / 2)];
    CHECK(p.vector == inserted[static_cast<std::size_t>(i)]);
    CHECK(p.count == 1);
  }
}

TEST_CASE("buffer invariants hold over random insert streams") {
  std::mt19937_64 gen(321);
  std::normal_distribution<double> normal(0.0, 2.0);
  const int k = 3;
  const int d = 5;
  const int capacity = 8;
  PrototypeBuffer buffer(d, k, capacity);
  std::vector<std::int64_t> inserted(k, 0);
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, d);

  for (int i = 0; i < 2000; ++i) {
    Eigen::VectorXd z(d);
    for (int j = 0; j < d; ++j) z(j) = normal(gen);
    const int y = static_cast<int>(gen() % k);
    buffer.insert(z, y);
    inserted[static_cast<std::size_t>(y)] += 1;
    sums.row(y) += z.transpose();

    const auto& protos = buffer.class_buffer(y);
    CHECK(protos.size() <= static_cast<std::size_t>(capacity));
    std::int64_t total = 0;
    Eigen::VectorXd weighted = Eigen::VectorXd::Zero(d);
    for (const Prototype& p : protos) {
      total += p.count;
      weighted += static_cast<double>(p.count) * p.vector;
    }
    CHECK(total == inserted[static_cast<std::size_t>(y)]);
    const Eigen::VectorXd running_mean =
        sums.row(y).transpose() / static_cast<double>(total);
    const double scale = std::max(1.0, running_mean.norm());
    CHECK((weighted / static_cast<double>(total) - running_mean).norm() / scale <
          tol::kBufferCentroid);
  }
}

TEST_CASE("flattened buffer order is class-major and stable") {
  PrototypeBuffer buffer(1, 3, 4);
  buffer.insert(Eigen::VectorXd::Constant(1, 5.0), 2);
  buffer.insert(Eigen::VectorXd::Constant(1, 1.0), 0);
  buffer.insert(Eigen::VectorXd::Constant(1, 6.0), 2);
  buffer.insert(Eigen::VectorXd::Constant(1, 2.0), 0);
  const auto flat = buffer.flattened();
  REQUIRE(flat.size() == 4);
  CHECK(flat[0]->vector(0) == 1.0);
  CHECK(flat[1]->vector(0) == 2.0);
  CHECK(flat[2]->vector(0) == 5.0);
  CHECK(flat[3]->vector(0) == 6.0);
}

TEST_CASE("buffer rejects invalid construction and labels") {
  CHECK_THROWS_AS(PrototypeBuffer(2, 2, 0), BadShape);
  PrototypeBuffer buffer(2, 2, 3);
  CHECK_THROWS_AS(buffer.insert(Eigen::Vector2d(0.0, 0.0), 2), LabelOutOfRange);
  CHECK_THROWS_AS(buffer.insert(Eigen::Vector2d(0.0, 0.0), -1), LabelOutOfRange);
  CHECK_THROWS_AS(buffer.insert(Eigen::Vector3d(0.0, 0.0, 0.0), 0), DimensionMismatch);
}

TEST_CASE("rehearsal step on a single-prototype buffer equals a direct step") {
  const SgdOptions opts{0.05, 0.9, 1e-4};
  const Eigen::Vector2d z(0.7, -0.3);

  PrototypeBuffer buffer(2, 2, 5);
  SoftmaxReadout via_buffer(2, 2, opts);
  Rng rng(42);
  exstream_learn(buffer, via_buffer, rng, z, 1, 256);

  SoftmaxReadout direct(2, 2, opts);
  Eigen::MatrixXd batch(1, 2);
  batch << 0.7, -0.3;
  direct.sgd_step(batch, std::vector<std::int32_t>{1});

  CHECK(via_buffer.weights() == direct.weights());
  CHECK(via_buffer.bias() == direct.bias());
  CHECK(buffer.total_prototypes() == 1);
}

TEST_CASE("rehearsal with zero learning rate still grows the buffer") {
  PrototypeBuffer buffer(2, 1, 10);
  SoftmaxReadout readout(2, 1, SgdOptions{0.0, 0.9, 0.0});
  Rng rng(1);
  exstream_learn(buffer, readout, rng, Eigen::Vector2d(1.0, 2.0), 0, 256);
  exstream_learn(buffer, readout, rng, Eigen::Vector2d(3.0, 4.0), 0, 256);
  CHECK(readout.weights() == Eigen::MatrixXd::Zero(1, 2));
  CHECK(buffer.total_prototypes() == 2);
}

TEST_CASE("capped rehearsal batches are seed-deterministic") {
  const SgdOptions opts{0.05, 0.9, 1e-4};
  std::mt19937_64 gen(9);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd stream(30, 3);
  for (int i = 0; i < 30; ++i)
    for (int j = 0; j < 3; ++j) stream(i, j) = normal(gen);

  auto run = [&](std::uint64_t seed) {
    PrototypeBuffer buffer(3, 2, 20);
    SoftmaxReadout readout(3, 2, opts);
    Rng rng(seed);
    for (int i = 0; i < 30; ++i) {
      exstream_learn(buffer, readout, rng, stream.row(i).transpose(), i % 2, 4);
    }
    return readout;
  };
  const SoftmaxReadout a = run(77);
  const SoftmaxReadout b = run(77);
  const SoftmaxReadout c = run(78);
  CHECK(a.weights() == b.weights());
  CHECK(a.bias() == b.bias());
  CHECK(a.weights() != c.weights());
}

TEST_CASE("repeated steps on a fixed buffer drive the loss down") {
  std::mt19937_64 gen(14);
  std::normal_distribution<double> normal(0.0, 0.5);
  PrototypeBuffer buffer(2, 2, 20);
  for (int i = 0; i < 40; ++i) {
    const int y = i % 2;
    Eigen::Vector2d z(normal(gen) + (y == 0 ? -2.0 : 2.0), normal(gen));
    buffer.insert(z, y);
  }

  const auto flat = buffer.flattened();
  Eigen::MatrixXd batch(static_cast<Eigen::Index>(flat.size()), 2);
  std::vector<std::int32_t> labels;
  for (std::size_t i = 0; i < flat.size(); ++i) {
    batch.row(static_cast<Eigen::Index>(i)) = flat[i]->vector.transpose();
    labels.push_back(flat[i]->label);
  }

  SoftmaxReadout readout(2, 2, SgdOptions{0.1, 0.9, 0.0});
  const double before =
      oracles::softmax_loss(readout.weights(), readout.bias(), batch, labels, 0.0);
  for (int step = 0; step < 50; ++step) readout.sgd_step(batch, labels);
  const double after =
      oracles::softmax_loss(readout.weights(), readout.bias(), batch, labels, 0.0);
  CHECK(std::isfinite(after));
  CHECK(after < before);
}

TEST_CASE("streaming fine-tuning equals a singleton batch step") {
  const SgdOptions opts{0.05, 0.9, 1e-4};
  SoftmaxReadout a(3, 2, opts);
  SoftmaxReadout b(3, 2, opts);
  const Eigen::Vector3d z(0.2, -1.0, 0.4);
  finetune_learn(a, z, 1);
  Eigen::MatrixXd batch(1, 3);
  batch << 0.2, -1.0, 0.4;
  b.sgd_step(batch, std::vector<std::int32_t>{1});
  CHECK(a.weights() == b.weights());
  CHECK(a.bias() == b.bias());
  CHECK(a.velocity_weights() == b.velocity_weights());
}

TEST_CASE("nearest class mean picks the closest seen class") {
  ClassMeans means(2, 3);
  means.observe(Eigen::Vector2d(0.0, 0.0), 0);
  means.observe(Eigen::Vector2d(2.0, 0.0), 1);
  CHECK(ncm_predict(means, Eigen::Vector2d(0.5, 0.0)) == 0);
  CHECK(ncm_predict(means, Eigen::Vector2d(1.8, 0.0)) == 1);
  // equidistant probe resolves to the lower index
  CHECK(ncm_predict(means, Eigen::Vector2d(1.0, 5.0)) == 0);
}

TEST_CASE("nearest class mean matches brute force over random instances") {
  std::mt19937_64 gen(88);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    ClassMeans means(4, 5);
    for (int c = 0; c < 5; ++c) {
      Eigen::VectorXd mu(4);
      for (int j = 0; j < 4; ++j) mu(j) = 3.0 * normal(gen);
      means.observe(mu, c);
    }
    Eigen::VectorXd z(4);
    for (int j = 0; j < 4; ++j) z(j) = 3.0 * normal(gen);

    int best = -1;
    double best_dist = 0.0;
    for (int c = 0; c < 5; ++c) {
      const double dist = (z - means.means().row(c).transpose()).norm();
      if (best < 0 || dist < best_dist) {
        best = c;
        best_dist = dist;
      }
    }
    CHECK(ncm_predict(means, z) == best);
  }
}

TEST_CASE("nearest class mean needs at least one observation") {
  ClassMeans means(2, 2);
  CHECK_THROWS_AS(ncm_predict(means, Eigen::Vector2d(0.0, 0.0)), NoClassesSeen);
}

TEST_CASE("offline fit is deterministic and zero epochs return the zero readout") {
  SynthSpec spec;
  spec.seed = 3;
  spec.num_classes = 3;
  spec.dim = 4;
  spec.per_class = 30;
  spec.class_mean_spread = 5.0;
  const FeatureBank bank = synth_bank(spec);

  const SoftmaxReadout zero = offline_softmax_fit(bank, 0, SgdOptions{}, 16, 11);
  CHECK(zero.weights() == Eigen::MatrixXd::Zero(3, 4));

  const SoftmaxReadout a = offline_softmax_fit(bank, 5, SgdOptions{}, 16, 11);
  const SoftmaxReadout b = offline_softmax_fit(bank, 5, SgdOptions{}, 16, 11);
  CHECK(a.weights() == b.weights());
  CHECK(a.bias() == b.bias());
}

TEST_CASE("offline fit separates a separable bank completely") {
  FeatureBank bank;
  bank.features.resize(40, 2);
  bank.num_classes = 2;
  for (int i = 0; i < 40; ++i) {
    const int y = i % 2;
    bank.labels.push_back(y);
    bank.instance_ids.push_back(-1);
    bank.frame_indices.push_back(-1);
    bank.features(i, 0) = static_cast<float>(y == 0 ? -2.0 + 0.01 * i : 2.0 + 0.01 * i);
    bank.features(i, 1) = static_cast<float>(0.1 * (i % 5));
  }
  const SoftmaxReadout readout = offline_softmax_fit(bank, 200, SgdOptions{}, 8, 5);
  int correct = 0;
  for (int i = 0; i < 40; ++i) {
    Eigen::Index argmax;
    readout.scores(bank.feature_row(i)).maxCoeff(&argmax);
    correct += static_cast<int>(argmax) == bank.labels[static_cast<std::size_t>(i)];
  }
  CHECK(correct == 40);
}

TEST_CASE("offline fit rejects an empty bank") {
  FeatureBank empty;
  CHECK_THROWS_AS(offline_softmax_fit(empty, 1, SgdOptions{}, 8, 1), EmptyBank);
}
