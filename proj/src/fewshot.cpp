#include "vern/fewshot.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "vern/error.hpp"
#include "vern/random.hpp"

namespace vern::fewshot {

double contrastive_loss(double d, int label, double margin) {
  if (d < 0.0) throw std::invalid_argument("distance must be nonnegative");
  if (!(margin > 0.0)) throw std::invalid_argument("margin must be positive");
  if (label == 1) return d * d;
  const double gap = std::max(margin - d, 0.0);
  return gap * gap;
}

double contrastive_loss_derivative(double d, int label, double margin) {
  if (label == 1) return 2.0 * d;
  return d < margin ? -2.0 * (margin - d) : 0.0;
}

DescriptorGenerator::DescriptorGenerator(const SyntheticConfig& config) : config_(config) {
  if (config.dim <= 0) throw ConfigError("descriptor dimension must be positive");
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (int c = 0; c <= kNumClasses; ++c) {
    Eigen::VectorXd dir(config.dim);
    for (auto& v : dir) v = n01(rng);
    dir.normalize();
    // The unseen center sits further out so it is dissimilar to every class.
    const double scale = c == kNumClasses ? 2.0 * config.separation : config.separation;
    centers_.push_back(scale * dir);
  }
}

Eigen::VectorXd DescriptorGenerator::sample(int cls, std::mt19937_64& rng) const {
  std::normal_distribution<double> noise(0.0, config_.noise);
  Eigen::VectorXd x = centers_.at(cls);
  for (auto& v : x) v += noise(rng);
  return x;
}

Eigen::VectorXd DescriptorGenerator::sample_unseen(std::mt19937_64& rng) const {
  return sample(kNumClasses, rng);
}

std::vector<Descriptor> DescriptorGenerator::dataset(int per_class, std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::vector<Descriptor> out;
  out.reserve(static_cast<std::size_t>(per_class) * kNumClasses);
  for (int c = 0; c < kNumClasses; ++c) {
    for (int i = 0; i < per_class; ++i) out.push_back({sample(c, rng), c});
  }
  return out;
}

std::vector<DescriptorPair> make_pairs(const std::vector<Descriptor>& data, int n_pairs,
                                       std::uint64_t seed) {
  std::array<std::vector<std::size_t>, kNumClasses> by_class;
  for (std::size_t i = 0; i < data.size(); ++i) by_class.at(data[i].label).push_back(i);
  int populated = 0;
  for (const auto& v : by_class) populated += !v.empty();
  if (populated < 2) throw std::invalid_argument("pairing needs at least two classes");

  std::mt19937_64 rng(seed);
  const auto pick = [&](int cls) {
    const auto& v = by_class[cls];
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
  };
  const auto random_class = [&] {
    int c;
    do {
      c = std::uniform_int_distribution<int>(0, kNumClasses - 1)(rng);
    } while (by_class[c].empty());
    return c;
  };

  std::vector<DescriptorPair> pairs;
  pairs.reserve(n_pairs);
  for (int k = 0; k < n_pairs; ++k) {
    const int a = random_class();
    if (k % 2 == 0) {
      pairs.push_back({data[pick(a)].x, data[pick(a)].x, 1});
    } else {
      int b;
      do {
        b = random_class();
      } while (b == a);
      pairs.push_back({data[pick(a)].x, data[pick(b)].x, 0});
    }
  }
  return pairs;
}

std::pair<std::vector<Descriptor>, std::vector<Descriptor>> split_dataset(
    const std::vector<Descriptor>& data, double holdout, std::uint64_t seed) {
  std::array<std::vector<Descriptor>, kNumClasses> by_class;
  for (const auto& d : data) by_class.at(d.label).push_back(d);
  std::mt19937_64 rng(seed);
  std::vector<Descriptor> train_set, test_set;
  for (auto& v : by_class) {
    std::shuffle(v.begin(), v.end(), rng);
    const auto n_test = static_cast<std::size_t>(std::llround(holdout * v.size()));
    const std::size_t n_train = v.size() - n_test;
    train_set.insert(train_set.end(), v.begin(), v.begin() + n_train);
    test_set.insert(test_set.end(), v.begin() + n_train, v.end());
  }
  return {std::move(train_set), std::move(test_set)};
}

double mean_loss(const EmbedderParams& p, const std::vector<DescriptorPair>& pairs,
                 double margin) {
  if (pairs.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& pr : pairs) {
    sum += contrastive_loss(pair_distance(p.embed(pr.x1), p.embed(pr.x2)), pr.label, margin);
  }
  return sum / pairs.size();
}

TrainingResult train(const std::vector<DescriptorPair>& pairs, const TrainingParams& params) {
  if (pairs.empty()) throw std::invalid_argument("training set is empty");
  const auto dim = pairs.front().x1.size();
  return train(pairs, params,
               EmbedderParams::random(dim, params.hidden_dim, params.embed_dim, params.seed));
}

TrainingResult train(const std::vector<DescriptorPair>& pairs, const TrainingParams& params,
                     EmbedderParams init) {
  if (pairs.empty()) throw std::invalid_argument("training set is empty");
  const bool has_pos = std::any_of(pairs.begin(), pairs.end(), [](auto& p) { return p.label == 1; });
  const bool has_neg = std::any_of(pairs.begin(), pairs.end(), [](auto& p) { return p.label == 0; });
  if (!has_pos || !has_neg) throw std::invalid_argument("training set needs both pair labels");
  if (!(params.margin > 0.0)) throw ConfigError("margin must be positive");
  if (params.batch_size <= 0 || params.epochs < 0) throw ConfigError("bad batch size or epoch count");

  TrainingResult result{std::move(init), {}};
  EmbedderParams& w = result.params;
  result.loss_curve.push_back(mean_loss(w, pairs, params.margin));

  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(params.seed ^ 0x5eedULL);

  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += params.batch_size) {
      const std::size_t end = std::min(order.size(), start + params.batch_size);
      auto grad = EmbedderParams::zeros(w.input_dim(), w.hidden_dim(), w.embed_dim());
      for (std::size_t k = start; k < end; ++k) {
        const auto& pr = pairs[order[k]];
        auto lg = loss_gradient<double>(w, pr.x1, pr.x2, pr.label, params.margin);
        epoch_loss += lg.loss;
        grad += lg.gradient;
      }
      grad *= -params.learning_rate / static_cast<double>(end - start);
      w += grad;
    }
    result.loss_curve.push_back(epoch_loss / pairs.size());
  }
  return result;
}

EmbeddedReferences embed_references(const EmbedderParams& p, const ReferenceSet& refs) {
  EmbeddedReferences out;
  for (int c = 0; c < kNumClasses; ++c) {
    if (refs[c].empty()) throw std::invalid_argument("reference class " + std::to_string(c) + " is empty");
    for (const auto& r : refs[c]) out.embeddings[c].push_back(p.embed(r));
  }
  return out;
}

Eigen::Vector4d min_class_distance(const EmbedderParams& p, const Eigen::VectorXd& query,
                                   const EmbeddedReferences& refs, bool squash) {
  const Eigen::VectorXd h = p.embed(query);
  Eigen::Vector4d out;
  for (int c = 0; c < kNumClasses; ++c) {
    if (refs.embeddings[c].empty()) throw std::invalid_argument("reference class " + std::to_string(c) + " is empty");
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : refs.embeddings[c]) best = std::min(best, pair_distance(h, r));
    out[c] = squash ? squash_distance(best) : best;
  }
  return out;
}

Eigen::Vector4d min_class_distance(const EmbedderParams& p, const Eigen::VectorXd& query,
                                   const ReferenceSet& refs, bool squash) {
  return min_class_distance(p, query, embed_references(p, refs), squash);
}

ReferenceSet pick_references(const std::vector<Descriptor>& data, int per_class) {
  ReferenceSet refs;
  for (const auto& d : data) {
    auto& bucket = refs.at(d.label);
    if (static_cast<int>(bucket.size()) < per_class) bucket.push_back(d.x);
  }
  return refs;
}

double nearest_reference_accuracy(const EmbedderParams& p, const std::vector<Descriptor>& test,
                                  const ReferenceSet& refs) {
  if (test.empty()) return 0.0;
  const auto emb = embed_references(p, refs);
  std::size_t correct = 0;
  for (const auto& d : test) {
    Eigen::Index arg;
    min_class_distance(p, d.x, emb).minCoeff(&arg);
    correct += arg == d.label;
  }
  return static_cast<double>(correct) / test.size();
}

std::string params_to_string(const EmbedderParams& p) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "vern-embedder 1\n" << p.input_dim() << ' ' << p.hidden_dim() << ' ' << p.embed_dim() << '\n';
  const auto write_rows = [&](const Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) os << (c ? " " : "") << m(r, c);
      os << '\n';
    }
  };
  write_rows(p.w1);
  write_rows(p.b1.transpose());
  write_rows(p.w2);
  write_rows(p.b2.transpose());
  return os.str();
}

EmbedderParams params_from_string(const std::string& text) {
  std::istringstream is(text);
  std::string magic;
  int version = 0;
  is >> magic >> version;
  if (magic != "vern-embedder" || version != 1) throw ConfigError("not a version-1 embedder file");
  Eigen::Index d = 0, h = 0, e = 0;
  is >> d >> h >> e;
  if (!is || d <= 0 || h <= 0 || e <= 0) throw ConfigError("bad embedder dimensions header");
  auto p = EmbedderParams::zeros(d, h, e);
  const auto read = [&](auto& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) is >> m(r, c);
  };
  read(p.w1);
  for (Eigen::Index i = 0; i < h; ++i) is >> p.b1[i];
  read(p.w2);
  for (Eigen::Index i = 0; i < e; ++i) is >> p.b2[i];
  if (!is) throw ConfigError("truncated embedder file");
  return p;
}

void save_params(const EmbedderParams& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << params_to_string(p);
}

EmbedderParams load_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return params_from_string(ss.str());
}

void write_loss_csv(const std::vector<double>& curve, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "epoch,mean_loss\n" << std::setprecision(17);
  for (std::size_t i = 0; i < curve.size(); ++i) out << i << ',' << curve[i] << '\n';
}

}  // namespace vern::fewshot

namespace vern::fewshot {

PipelineResult run_pipeline(const PipelineConfig& config) {
  if (config.per_class < 2) throw ConfigError("need at least two descriptors per class");
  const DescriptorGenerator gen(config.data);
  const auto data = gen.dataset(config.per_class, mix_seed({config.seed, 1}));
  auto [train_set, test_set] = split_dataset(data, config.holdout, mix_seed({config.seed, 2}));
  const int n_pairs = config.pairs_per_descriptor * static_cast<int>(train_set.size());
  const auto pairs = make_pairs(train_set, n_pairs, mix_seed({config.seed, 3}));

  PipelineResult r;
  r.training = train(pairs, config.training);
  r.references = pick_references(train_set, config.references_per_class);
  r.holdout_accuracy = nearest_reference_accuracy(r.training.params, test_set, r.references);
  r.train_size = train_set.size();
  r.test_size = test_set.size();
  return r;
}

ReferenceSet reference_set(const DescriptorGenerator& gen, int per_class, std::uint64_t seed) {
  return pick_references(gen.dataset(per_class, seed), per_class);
}

}  // namespace vern::fewshot
