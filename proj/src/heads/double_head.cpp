#include "xspec/heads/double_head.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "xspec/nn/adam.hpp"
#include "xspec/nn/checkpoint.hpp"
#include "xspec/util/files.hpp"

namespace xspec::heads {

using nn::Tensor;

Tensor<float> embedding_matrix(const std::vector<const Embedding*>& rows) {
  if (rows.empty()) throw std::invalid_argument("embedding_matrix: no rows");
  const std::size_t d = rows[0]->size();
  std::vector<float> data;
  data.reserve(rows.size() * d);
  for (const auto* r : rows) {
    if (r->size() != d) throw std::invalid_argument("embedding_matrix: rows differ in length");
    for (double v : *r) data.push_back(static_cast<float>(v));
  }
  return Tensor<float>({static_cast<int>(rows.size()), static_cast<int>(d)}, std::move(data));
}

Standardizer Standardizer::fit(const std::vector<Embedding>& rows, int dim) {
  std::vector<double> mean(static_cast<std::size_t>(dim), 0.0), var(static_cast<std::size_t>(dim), 0.0);
  for (const auto& r : rows)
    for (int j = 0; j < dim; ++j) mean[static_cast<std::size_t>(j)] += r[static_cast<std::size_t>(j)];
  const double n = std::max<double>(1.0, static_cast<double>(rows.size()));
  for (auto& m : mean) m /= n;
  for (const auto& r : rows)
    for (int j = 0; j < dim; ++j) {
      const double d = r[static_cast<std::size_t>(j)] - mean[static_cast<std::size_t>(j)];
      var[static_cast<std::size_t>(j)] += d * d;
    }
  Standardizer s;
  s.mean = Tensor<float>({dim});
  s.inv_std = Tensor<float>({dim});
  for (int j = 0; j < dim; ++j) {
    s.mean.data()[static_cast<std::size_t>(j)] = static_cast<float>(mean[static_cast<std::size_t>(j)]);
    s.inv_std.data()[static_cast<std::size_t>(j)] =
        static_cast<float>(1.0 / std::sqrt(var[static_cast<std::size_t>(j)] / n + 1e-8));
  }
  return s;
}

Tensor<float> Standardizer::apply(const Tensor<float>& x) const {
  const int n = x.dim(0), d = x.dim(1);
  if (d != mean.dim(0)) throw nn::DimensionError("standardizer: width " + std::to_string(d) + " != " +
                                                 std::to_string(mean.dim(0)));
  Tensor<float> m({n, d}), s({n, d});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) {
      m.data()[static_cast<std::size_t>(i) * d + j] = mean.data()[static_cast<std::size_t>(j)];
      s.data()[static_cast<std::size_t>(i) * d + j] = inv_std.data()[static_cast<std::size_t>(j)];
    }
  return nn::mul(nn::sub(x, m), s);
}

DoubleHead::DoubleHead(int dim_a, int dim_b, int hidden, Rng& rng)
    : dim_a_(dim_a),
      dim_b_(dim_b),
      hidden_(hidden),
      std_a_{Tensor<float>({dim_a}), Tensor<float>({dim_a}, 1.f)},
      std_b_{Tensor<float>({dim_b}), Tensor<float>({dim_b}, 1.f)},
      fc1_(dim_a + dim_b, hidden, rng),
      fc2_(hidden, 2, rng) {}

Tensor<float> DoubleHead::logits(const Tensor<float>& a, const Tensor<float>& b) const {
  const Tensor<float> x = nn::concat_channels(std_a_.apply(a), std_b_.apply(b));
  return fc2_(nn::relu(fc1_(x)));
}

Tensor<float> DoubleHead::probabilities(const Tensor<float>& a, const Tensor<float>& b) const {
  return nn::softmax(logits(a, b));
}

double DoubleHead::score(const Embedding& a, const Embedding& b) const {
  nn::NoGradGuard no_grad;
  const Tensor<float> p = probabilities(embedding_matrix({&a}), embedding_matrix({&b}));
  return p.data()[1];
}

nn::ParamList<float> DoubleHead::parameters() const {
  nn::ParamList<float> out;
  out.append("fc1.", fc1_.parameters());
  out.append("fc2.", fc2_.parameters());
  out.buffers.push_back({"std_a.mean", std_a_.mean});
  out.buffers.push_back({"std_a.inv_std", std_a_.inv_std});
  out.buffers.push_back({"std_b.mean", std_b_.mean});
  out.buffers.push_back({"std_b.inv_std", std_b_.inv_std});
  return out;
}

DoubleHeadResult train_double_head(const std::vector<EmbeddingPair>& pairs, const DoubleHeadConfig& config) {
  if (pairs.empty()) throw std::invalid_argument("train_double_head: no training pairs");
  std::size_t genuine = 0;
  for (const auto& p : pairs) {
    if (p.label != 0 && p.label != 1) throw std::invalid_argument("train_double_head: labels must be 0 or 1");
    genuine += static_cast<std::size_t>(p.label);
  }
  if (genuine == 0 || genuine == pairs.size())
    throw std::invalid_argument("train_double_head: need both genuine and impostor pairs");
  const int da = static_cast<int>(pairs[0].a.size()), db = static_cast<int>(pairs[0].b.size());

  Rng init(Rng::mix(config.seed, 11));
  DoubleHeadResult result{DoubleHead(da, db, config.hidden, init), {}};
  std::vector<Embedding> as, bs;
  for (const auto& p : pairs) {
    as.push_back(p.a);
    bs.push_back(p.b);
  }
  result.head.standardizer_a() = Standardizer::fit(as, da);
  result.head.standardizer_b() = Standardizer::fit(bs, db);

  const double n = static_cast<double>(pairs.size());
  const std::vector<float> weights{static_cast<float>(n / (2.0 * static_cast<double>(pairs.size() - genuine))),
                                   static_cast<float>(n / (2.0 * static_cast<double>(genuine)))};
  const nn::ParamList<float> params = result.head.parameters();
  nn::AdamState<float> opt(nn::AdamConfig{config.lr, 0.9, 0.999, 1e-8});
  Rng shuffle(Rng::mix(config.seed, 12));
  std::vector<std::size_t> order(pairs.size());
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    shuffle.shuffle(order);
    double loss_sum = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      std::vector<const Embedding*> ra, rb;
      std::vector<int> y;
      for (std::size_t k = start; k < end; ++k) {
        ra.push_back(&pairs[order[k]].a);
        rb.push_back(&pairs[order[k]].b);
        y.push_back(pairs[order[k]].label);
      }
      params.zero_grad();
      const Tensor<float> loss =
          nn::cross_entropy(result.head.logits(embedding_matrix(ra), embedding_matrix(rb)), y, weights);
      nn::backward(loss);
      nn::adam_step(params.tensors(), opt);
      loss_sum += static_cast<double>(loss.item()) * static_cast<double>(end - start);
    }
    result.log.loss.push_back(loss_sum / n);
  }
  return result;
}

DoubleHeadResult train_double_head(const EmbeddingModel& model_a, const EmbeddingModel& model_b,
                                   const std::vector<ImagePair>& pairs, const DoubleHeadConfig& config) {
  std::vector<EmbeddingPair> embedded(pairs.size());
  const long n = static_cast<long>(pairs.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    const auto& p = pairs[static_cast<std::size_t>(i)];
    embedded[static_cast<std::size_t>(i)] = {model_a.embed(*p.a), model_b.embed(*p.b), p.label};
  }
  return train_double_head(embedded, config);
}

void save_double_head(const std::filesystem::path& path, const DoubleHead& head) {
  nn::save_checkpoint(path, head.parameters());
  atomic_write(path.string() + ".cfg", "dim_a=" + std::to_string(head.dim_a()) + "\ndim_b=" +
                                           std::to_string(head.dim_b()) + "\nhidden=" +
                                           std::to_string(head.hidden()) + "\n");
}

namespace {

int config_int(const std::vector<std::string>& lines, const std::string& key) {
  for (const auto& l : lines)
    if (l.rfind(key + "=", 0) == 0) return std::stoi(l.substr(key.size() + 1));
  throw std::runtime_error("head sidecar is missing '" + key + "'");
}

}  // namespace

DoubleHead load_double_head(const std::filesystem::path& path) {
  const auto lines = split_lines(read_file(path.string() + ".cfg"));
  Rng rng(0);
  DoubleHead head(config_int(lines, "dim_a"), config_int(lines, "dim_b"), config_int(lines, "hidden"), rng);
  nn::load_checkpoint(path, head.parameters());
  return head;
}

}  // namespace xspec::heads
