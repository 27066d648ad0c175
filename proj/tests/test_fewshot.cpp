#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "vern/fewshot.hpp"
#include "vern/invariants.hpp"

using namespace vern::fewshot;

namespace {

Eigen::VectorXd random_vec(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

}  // namespace

TEST_CASE("zero weights embed everything at the origin") {
  const auto p = EmbedderParams::zeros(6, 5, 3);
  std::mt19937_64 rng(1);
  CHECK(p.embed(random_vec(6, rng)).isZero(0.0));
}

TEST_CASE("one set of weights serves both branches") {
  const auto p = EmbedderParams::random(6, 5, 3, 9);
  std::mt19937_64 rng(2);
  const Eigen::VectorXd x = random_vec(6, rng);
  const Eigen::VectorXd y = x;
  CHECK(p.embed(x) == p.embed(y));
  CHECK(pair_distance(p.embed(x), p.embed(y)) == 0.0);
}

TEST_CASE("seeded init and embedding are bit-reproducible") {
  const auto a = EmbedderParams::random(6, 5, 3, 77), b = EmbedderParams::random(6, 5, 3, 77);
  CHECK(a.flatten() == b.flatten());
  std::mt19937_64 rng(3);
  const Eigen::VectorXd x = random_vec(6, rng);
  CHECK(a.embed(x) == b.embed(x));
  CHECK_THROWS(a.embed(random_vec(5, rng)));
}

TEST_CASE("flatten and assign are inverses") {
  auto p = EmbedderParams::random(4, 3, 2, 5);
  Eigen::VectorXd flat = p.flatten();
  CHECK(flat.size() == p.num_params());
  flat(0) += 1.0;
  p.assign(flat);
  CHECK(p.flatten() == flat);
  CHECK_THROWS(p.assign(Eigen::VectorXd::Zero(3)));
}

TEST_CASE("pair distance") {
  Eigen::Vector2d h2(0.5, -1.0);
  CHECK(pair_distance(h2, h2) == 0.0);
  CHECK(pair_distance(Eigen::Vector2d(h2 + Eigen::Vector2d(3, 4)), h2) == doctest::Approx(5.0));
  std::mt19937_64 rng(4);
  for (int i = 0; i < 200; ++i) {
    const Eigen::VectorXd a = random_vec(9, rng), b = random_vec(9, rng);
    double s = 0.0;
    for (int k = 0; k < 9; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    CHECK(std::abs(pair_distance(a, b) - std::sqrt(s)) < 1e-12);
  }
  CHECK_THROWS(pair_distance(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(3)));
}

TEST_CASE("contrastive loss values") {
  CHECK(contrastive_loss(0.5, 1, 1.0) == doctest::Approx(0.25));
  CHECK(contrastive_loss(1.0, 0, 1.0) == 0.0);
  CHECK(contrastive_loss(3.0, 0, 1.0) == 0.0);
  CHECK(contrastive_loss(0.4, 0, 1.0) == doctest::Approx(0.36));
  CHECK(contrastive_loss(0.0, 1, 1.0) == 0.0);
  CHECK_THROWS(contrastive_loss(-0.1, 1, 1.0));
  CHECK_THROWS(contrastive_loss(0.1, 1, 0.0));
}

TEST_CASE("contrastive loss is nonnegative and zero only where expected") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 4.0), um(0.1, 3.0);
  for (int i = 0; i < 5000; ++i) {
    const double d = u(rng), m = um(rng);
    const int label = i & 1;
    const double j = contrastive_loss(d, label, m);
    CHECK(j >= 0.0);
    const bool zero_expected = label == 1 ? d == 0.0 : d >= m;
    CHECK((j == 0.0) == zero_expected);
  }
}

TEST_CASE("loss derivative") {
  CHECK(contrastive_loss_derivative(0.5, 1, 1.0) == doctest::Approx(1.0));
  CHECK(contrastive_loss_derivative(0.4, 0, 1.0) == doctest::Approx(-1.2));
  CHECK(contrastive_loss_derivative(1.5, 0, 1.0) == 0.0);
  CHECK(contrastive_loss_derivative(1.0, 0, 1.0) == 0.0);
}

TEST_CASE("gradient is zero past the margin and for identical similar inputs") {
  const auto p = EmbedderParams::random(4, 6, 3, 11);
  std::mt19937_64 rng(6);
  const Eigen::VectorXd x1 = random_vec(4, rng), x2 = random_vec(4, rng);
  const double d = pair_distance(p.embed(x1), p.embed(x2));
  CHECK(loss_gradient(p, x1, x2, 0, 0.5 * d).gradient.flatten().isZero(0.0));
  CHECK(loss_gradient(p, x1, x1, 1, 1.0).gradient.flatten().isZero(0.0));
  CHECK(loss_gradient(p, x1, x2, 1, 1.0).loss == doctest::Approx(d * d));
}

TEST_CASE("analytic gradient matches central differences") {
  const auto g = vern::invariants::check_loss_gradient(40, 1e-5, 12);
  CHECK(g.configs == 40);
  CHECK(g.max_rel_error < 1e-4);
}

TEST_CASE("gradient descent lowers the loss with the shared weights") {
  const DescriptorGenerator gen({8, 3.0, 1.0, 3});
  const auto data = gen.dataset(100, 4);
  const auto pairs = make_pairs(data, 800, 5);
  TrainingParams tp;
  tp.epochs = 10;
  const auto r = train(pairs, tp);
  REQUIRE(r.loss_curve.size() == 11u);
  CHECK(r.loss_curve.back() < r.loss_curve.front());
  CHECK(mean_loss(r.params, pairs, tp.margin) < r.loss_curve.front());
}

TEST_CASE("zero learning rate leaves the parameters unchanged") {
  const DescriptorGenerator gen({8, 3.0, 1.0, 3});
  const auto pairs = make_pairs(gen.dataset(20, 4), 100, 5);
  TrainingParams tp;
  tp.learning_rate = 0.0;
  tp.epochs = 3;
  const auto init = EmbedderParams::random(8, tp.hidden_dim, tp.embed_dim, 99);
  const auto r = train(pairs, tp, init);
  CHECK(r.params.flatten() == init.flatten());
}

TEST_CASE("training is deterministic for a seed") {
  const DescriptorGenerator gen({8, 3.0, 1.0, 3});
  const auto pairs = make_pairs(gen.dataset(40, 4), 300, 5);
  TrainingParams tp;
  tp.epochs = 3;
  CHECK(train(pairs, tp).params.flatten() == train(pairs, tp).params.flatten());
}

TEST_CASE("training rejects degenerate pair sets") {
  TrainingParams tp;
  CHECK_THROWS(train({}, tp));
  std::vector<DescriptorPair> only_pos(3, DescriptorPair{Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2), 1});
  CHECK_THROWS(train(only_pos, tp));
}

TEST_CASE("pairs are balanced and labelled by class equality") {
  const DescriptorGenerator gen({6, 3.0, 1.0, 8});
  const auto data = gen.dataset(30, 9);
  const auto pairs = make_pairs(data, 400, 10);
  int pos = 0;
  for (const auto& pr : pairs) pos += pr.label;
  CHECK(pairs.size() == 400u);
  CHECK(pos == 200);
}

TEST_CASE("split holds out a per-class fraction") {
  const DescriptorGenerator gen({6, 3.0, 1.0, 8});
  const auto data = gen.dataset(50, 9);
  const auto [train_set, test_set] = split_dataset(data, 0.2, 3);
  CHECK(train_set.size() + test_set.size() == data.size());
  std::array<int, kNumClasses> held{};
  for (const auto& d : test_set) ++held[d.label];
  for (int c : held) CHECK(c == 10);
}

TEST_CASE("well separated clusters give high held-out accuracy") {
  PipelineConfig cfg;
  cfg.per_class = 150;
  cfg.data.separation = 6.0;
  cfg.training.epochs = 50;
  const auto r = run_pipeline(cfg);
  CHECK(r.test_size == 4u * 30u);
  CHECK(r.holdout_accuracy >= 0.95);
}

TEST_CASE("min class distance against exhaustive enumeration") {
  const auto p = EmbedderParams::random(5, 6, 3, 21);
  const DescriptorGenerator gen({5, 3.0, 1.0, 22});
  const ReferenceSet refs = reference_set(gen, 5, 23);
  const auto emb = embed_references(p, refs);
  std::mt19937_64 rng(24);
  for (int i = 0; i < 50; ++i) {
    const Eigen::VectorXd q = gen.sample(i % 4, rng);
    Eigen::Vector4d ref;
    for (int c = 0; c < 4; ++c) {
      ref[c] = std::numeric_limits<double>::infinity();
      for (const auto& r : refs[c]) {
        const Eigen::VectorXd diff = p.embed(q) - p.embed(r);
        ref[c] = std::min(ref[c], std::sqrt(diff.squaredNorm()));
      }
    }
    CHECK((min_class_distance(p, q, refs) - ref).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((min_class_distance(p, q, emb) - ref).cwiseAbs().maxCoeff() < 1e-12);
    const Eigen::Vector4d sq = min_class_distance(p, q, refs, true);
    for (int c = 0; c < 4; ++c) CHECK(sq[c] == doctest::Approx(ref[c] / (1.0 + ref[c])));
  }
}

TEST_CASE("query equal to a reference has zero distance to its class") {
  const auto p = EmbedderParams::random(5, 6, 3, 21);
  const DescriptorGenerator gen({5, 3.0, 1.0, 22});
  ReferenceSet refs = reference_set(gen, 1, 23);
  CHECK(min_class_distance(p, refs[2][0], refs)[2] == 0.0);
  for (int c = 0; c < 4; ++c) {
    CHECK(min_class_distance(p, refs[0][0], refs)[c] ==
          doctest::Approx(pair_distance(p.embed(refs[0][0]), p.embed(refs[c][0]))));
  }
  refs[3].clear();
  CHECK_THROWS(min_class_distance(p, refs[0][0], refs));
}

TEST_CASE("scaling all distances keeps the nearest class") {
  std::mt19937_64 rng(30);
  std::uniform_real_distribution<double> u(0.0, 1.0), s(0.1, 10.0);
  for (int i = 0; i < 500; ++i) {
    Eigen::Vector4d d(u(rng), u(rng), u(rng), u(rng));
    Eigen::Index a, b;
    d.minCoeff(&a);
    (s(rng) * d).minCoeff(&b);
    CHECK(a == b);
  }
}

TEST_CASE("parameter text round trip") {
  const auto p = EmbedderParams::random(4, 3, 2, 5);
  const auto q = params_from_string(params_to_string(p));
  CHECK(q.flatten() == p.flatten());
  CHECK_THROWS(params_from_string("nonsense"));
}
