#include "xspec/heads/triplet.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "xspec/nn/adam.hpp"
#include "xspec/nn/checkpoint.hpp"
#include "xspec/util/files.hpp"

namespace xspec::heads {

using nn::Tensor;

template <typename T>
Tensor<T> improved_triplet_loss(const Tensor<T>& anchor, const Tensor<T>& positive, const Tensor<T>& negative,
                                double alpha, double margin, double beta) {
  if (anchor.shape() != positive.shape() || anchor.shape() != negative.shape() || anchor.ndim() != 2)
    throw nn::DimensionError("triplet loss expects three [N, D] tensors of one shape");
  const Tensor<T> d_ap = nn::sum_rows(nn::square(nn::sub(anchor, positive)));
  const Tensor<T> d_an = nn::sum_rows(nn::square(nn::sub(anchor, negative)));
  const Tensor<T> inter = nn::relu(nn::add_scalar(nn::sub(d_ap, d_an), static_cast<T>(alpha)));
  const Tensor<T> intra = nn::relu(nn::add_scalar(d_ap, static_cast<T>(-margin)));
  return nn::mean(nn::add(inter, nn::scale(intra, static_cast<T>(beta))));
}

template Tensor<float> improved_triplet_loss(const Tensor<float>&, const Tensor<float>&, const Tensor<float>&,
                                             double, double, double);
template Tensor<double> improved_triplet_loss(const Tensor<double>&, const Tensor<double>&,
                                              const Tensor<double>&, double, double, double);

TripletHead::TripletHead(int dim, int hidden, int out, Rng& rng)
    : dim_(dim),
      hidden_(hidden),
      out_(out),
      std_{Tensor<float>({dim}), Tensor<float>({dim}, 1.f)},
      fc1_(dim, hidden, rng),
      fc2_(hidden, out, rng) {}

Tensor<float> TripletHead::project(const Tensor<float>& x) const {
  return nn::l2_normalize_rows(fc2_(nn::relu(fc1_(std_.apply(x)))));
}

Embedding TripletHead::project(const Embedding& e) const {
  nn::NoGradGuard no_grad;
  const Tensor<float> p = project(embedding_matrix({&e}));
  return Embedding(p.data().begin(), p.data().end());
}

double TripletHead::score(const Embedding& a, const Embedding& b) const {
  const Embedding pa = project(a), pb = project(b);
  double s = 0;
  for (std::size_t i = 0; i < pa.size(); ++i) s += (pa[i] - pb[i]) * (pa[i] - pb[i]);
  return -std::sqrt(s);
}

nn::ParamList<float> TripletHead::parameters() const {
  nn::ParamList<float> out;
  out.append("fc1.", fc1_.parameters());
  out.append("fc2.", fc2_.parameters());
  out.buffers.push_back({"std.mean", std_.mean});
  out.buffers.push_back({"std.inv_std", std_.inv_std});
  return out;
}

namespace {

double sq_dist(std::span<const float> a, std::span<const float> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * static_cast<double>(a[i] - b[i]);
  return s;
}

}  // namespace

TripletResult train_triplet_head(const std::vector<Embedding>& embeddings, const std::vector<int>& labels,
                                 const TripletConfig& config) {
  if (embeddings.size() != labels.size()) throw std::invalid_argument("train_triplet_head: one label per embedding");
  if (config.alpha <= 0) throw std::invalid_argument("train_triplet_head: alpha must be positive");
  if (config.classes_per_batch < 2 || config.per_class < 2)
    throw std::invalid_argument("train_triplet_head: batches need two classes with two samples each");
  TripletResult result;
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  std::vector<int> classes;
  for (const auto& [c, members] : by_class) {
    if (members.size() < 2)
      result.warnings.push_back("class " + std::to_string(c) + " has fewer than 2 samples; excluded");
    else
      classes.push_back(c);
  }
  if (classes.size() < 2) throw std::invalid_argument("train_triplet_head: need two classes with two samples");
  const int dim = static_cast<int>(embeddings[0].size());

  Rng init(Rng::mix(config.seed, 21));
  result.head = TripletHead(dim, config.hidden, config.out, init);
  result.head.standardizer() = Standardizer::fit(embeddings, dim);
  const nn::ParamList<float> params = result.head.parameters();
  nn::AdamState<float> opt(nn::AdamConfig{config.lr, 0.9, 0.999, 1e-8});
  Rng rng(Rng::mix(config.seed, 22));

  const std::size_t per_batch = std::min<std::size_t>(static_cast<std::size_t>(config.classes_per_batch), classes.size());
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<int> order = classes;
    rng.shuffle(order);
    double loss_sum = 0;
    int batches = 0;
    for (std::size_t start = 0; start + 1 < order.size(); start += per_batch) {
      std::vector<int> batch_classes(order.begin() + static_cast<long>(start),
                                     order.begin() + static_cast<long>(std::min(order.size(), start + per_batch)));
      if (batch_classes.size() < 2) break;
      std::vector<const Embedding*> rows;
      std::vector<int> row_class;
      for (int c : batch_classes) {
        std::vector<std::size_t> members = by_class[c];
        rng.shuffle(members);
        const std::size_t k = std::min<std::size_t>(members.size(), static_cast<std::size_t>(config.per_class));
        for (std::size_t i = 0; i < k; ++i) {
          rows.push_back(&embeddings[members[i]]);
          row_class.push_back(c);
        }
      }
      Tensor<float> proj;
      {
        nn::NoGradGuard no_grad;
        proj = result.head.project(embedding_matrix(rows));
      }
      const std::size_t n = rows.size(), d = static_cast<std::size_t>(config.out);
      auto row = [&](std::size_t i) { return std::span<const float>(proj.data().subspan(i * d, d)); };
      std::vector<int> ia, ip, in;
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t p = 0; p < n; ++p) {
          if (a == p || row_class[a] != row_class[p]) continue;
          const double dap = sq_dist(row(a), row(p));
          long semi = -1, violating = -1;
          double semi_d = INFINITY;
          std::vector<std::size_t> negatives, violators;
          for (std::size_t m = 0; m < n; ++m) {
            if (row_class[m] == row_class[a]) continue;
            negatives.push_back(m);
            const double dan = sq_dist(row(a), row(m));
            if (dan < dap + config.alpha) violators.push_back(m);
            if (dan > dap && dan < dap + config.alpha && dan < semi_d) {
              semi_d = dan;
              semi = static_cast<long>(m);
            }
          }
          if (semi < 0 && !violators.empty()) violating = static_cast<long>(violators[rng.below(violators.size())]);
          const long neg = semi >= 0 ? semi : violating >= 0 ? violating
                                                             : static_cast<long>(negatives[rng.below(negatives.size())]);
          ia.push_back(static_cast<int>(a));
          ip.push_back(static_cast<int>(p));
          in.push_back(static_cast<int>(neg));
        }
      auto gather = [&](const std::vector<int>& idx) {
        std::vector<const Embedding*> g;
        for (int i : idx) g.push_back(rows[static_cast<std::size_t>(i)]);
        return embedding_matrix(g);
      };
      params.zero_grad();
      const Tensor<float> loss =
          improved_triplet_loss(result.head.project(gather(ia)), result.head.project(gather(ip)),
                                result.head.project(gather(in)), config.alpha, config.margin, config.beta);
      nn::backward(loss);
      nn::adam_step(params.tensors(), opt);
      loss_sum += loss.item();
      ++batches;
    }
    result.log.loss.push_back(batches ? loss_sum / batches : 0.0);
  }
  return result;
}

void save_triplet_head(const std::filesystem::path& path, const TripletHead& head) {
  nn::save_checkpoint(path, head.parameters());
  atomic_write(path.string() + ".cfg", "dim=" + std::to_string(head.dim()) + "\nhidden=" +
                                           std::to_string(head.hidden()) + "\nout=" +
                                           std::to_string(head.out()) + "\n");
}

TripletHead load_triplet_head(const std::filesystem::path& path) {
  int dim = 0, hidden = 0, out = 0;
  for (const auto& l : split_lines(read_file(path.string() + ".cfg"))) {
    const auto eq = l.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = l.substr(0, eq);
    const int v = std::stoi(l.substr(eq + 1));
    if (key == "dim") dim = v;
    else if (key == "hidden") hidden = v;
    else if (key == "out") out = v;
  }
  if (dim <= 0 || hidden <= 0 || out <= 0) throw std::runtime_error(path.string() + ".cfg: incomplete triplet head sidecar");
  Rng rng(0);
  TripletHead head(dim, hidden, out, rng);
  nn::load_checkpoint(path, head.parameters());
  return head;
}

}  // namespace xspec::heads
