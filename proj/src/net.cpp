#include "net.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace fa {

struct VelocityNet::Trace {
  Vec feat;                    // input features
  std::vector<Vec> act;       // post-tanh activations per hidden layer
  Vec out;
};

VelocityNet::VelocityNet(const NetConfig& cfg, bool zero_init) : cfg_(cfg) {
  if (cfg.d < 1 || cfg.n_labels < 1 || cfg.hidden < 1 || cfg.layers < 1 ||
      cfg.freq < 1 || cfg.embed < 1)
    throw std::invalid_argument("VelocityNet: invalid config");
  in_dim_ = cfg.d + 2 * cfg.freq + cfg.embed;

  size_t off = 0;
  for (int l = 0; l < cfg.layers; ++l) {
    int fan_in = (l == 0) ? in_dim_ : cfg.hidden;
    w_off_.push_back(off);
    off += static_cast<size_t>(cfg.hidden) * fan_in;
    b_off_.push_back(off);
    off += cfg.hidden;
  }
  head_w_ = off;
  off += static_cast<size_t>(cfg.d) * cfg.hidden;
  head_b_ = off;
  off += cfg.d;
  emb_ = off;
  off += static_cast<size_t>(cfg.n_labels + 1) * cfg.embed;
  w_.assign(off, 0.0);

  if (!zero_init) {
    RandomStream stream(cfg.init_seed);
    auto init_block = [&](size_t start, size_t count, int fan_in, int fan_out) {
      double lim = std::sqrt(6.0 / (fan_in + fan_out));
      for (size_t i = 0; i < count; ++i)
        w_[start + i] = lim * (2.0 * stream.uniform() - 1.0);
    };
    for (int l = 0; l < cfg.layers; ++l) {
      int fan_in = (l == 0) ? in_dim_ : cfg.hidden;
      init_block(w_off_[l], static_cast<size_t>(cfg.hidden) * fan_in, fan_in,
                 cfg.hidden);
    }
    init_block(head_w_, static_cast<size_t>(cfg.d) * cfg.hidden, cfg.hidden,
               cfg.d);
    init_block(emb_, static_cast<size_t>(cfg.n_labels + 1) * cfg.embed, 1, 1);
  }
}

Vec VelocityNet::features(const Vec& x, double t, int label) const {
  if (static_cast<int>(x.size()) != cfg_.d)
    throw std::invalid_argument("VelocityNet: input dimension mismatch");
  if (label < 0 || label > cfg_.n_labels)
    throw std::invalid_argument("VelocityNet: unknown label " +
                                std::to_string(label));
  Vec f(in_dim_);
  size_t p = 0;
  for (int j = 0; j < cfg_.d; ++j) f[p++] = x[j];
  for (int k = 0; k < cfg_.freq; ++k) {
    double a = 2.0 * M_PI * std::pow(2.0, k) * t;
    f[p++] = std::sin(a);
    f[p++] = std::cos(a);
  }
  const double* row = w_.data() + emb_ + static_cast<size_t>(label) * cfg_.embed;
  for (int j = 0; j < cfg_.embed; ++j) f[p++] = row[j];
  return f;
}

void VelocityNet::forward_trace(const Vec& x, double t, int label,
                                Trace& tr) const {
  tr.feat = features(x, t, label);
  tr.act.assign(cfg_.layers, Vec(cfg_.hidden));
  const Vec* prev = &tr.feat;
  for (int l = 0; l < cfg_.layers; ++l) {
    int fan_in = (l == 0) ? in_dim_ : cfg_.hidden;
    const double* W = w_.data() + w_off_[l];
    const double* b = w_.data() + b_off_[l];
    Vec& a = tr.act[l];
    for (int i = 0; i < cfg_.hidden; ++i) {
      double s = b[i];
      const double* wrow = W + static_cast<size_t>(i) * fan_in;
      for (int j = 0; j < fan_in; ++j) s += wrow[j] * (*prev)[j];
      a[i] = std::tanh(s);
    }
    prev = &a;
  }
  tr.out.assign(cfg_.d, 0.0);
  const double* W = w_.data() + head_w_;
  const double* b = w_.data() + head_b_;
  for (int i = 0; i < cfg_.d; ++i) {
    double s = b[i];
    const double* wrow = W + static_cast<size_t>(i) * cfg_.hidden;
    for (int j = 0; j < cfg_.hidden; ++j) s += wrow[j] * (*prev)[j];
    tr.out[i] = s;
  }
}

Vec VelocityNet::forward(const Vec& x, double t, int label) const {
  Trace tr;
  forward_trace(x, t, label, tr);
  return tr.out;
}

double VelocityNet::cfm_loss(const Vec& x0, const Vec& eps, double t, int label,
                             std::vector<double>* grad) const {
  require_same_dim(x0, eps, "cfm_loss");
  Vec xt = affine_path(x0, eps, t);
  Vec target = conditional_velocity(x0, eps);  // eps - x0

  Trace tr;
  forward_trace(xt, t, label, tr);

  double loss = 0.0;
  Vec dout(cfg_.d);
  for (int i = 0; i < cfg_.d; ++i) {
    double r = tr.out[i] - target[i];
    loss += r * r;
    dout[i] = 2.0 * r;
  }
  if (!grad) return loss;
  if (grad->size() != w_.size())
    throw std::invalid_argument("cfm_loss: gradient buffer size mismatch");
  std::vector<double>& g = *grad;

  // head
  Vec delta(cfg_.hidden, 0.0);
  {
    const Vec& h = tr.act[cfg_.layers - 1];
    const double* W = w_.data() + head_w_;
    for (int i = 0; i < cfg_.d; ++i) {
      double* grow = g.data() + head_w_ + static_cast<size_t>(i) * cfg_.hidden;
      const double* wrow = W + static_cast<size_t>(i) * cfg_.hidden;
      for (int j = 0; j < cfg_.hidden; ++j) {
        grow[j] += dout[i] * h[j];
        delta[j] += dout[i] * wrow[j];
      }
      g[head_b_ + i] += dout[i];
    }
  }

  // hidden layers, backwards
  for (int l = cfg_.layers - 1; l >= 0; --l) {
    int fan_in = (l == 0) ? in_dim_ : cfg_.hidden;
    const Vec& a = tr.act[l];
    const Vec& prev = (l == 0) ? tr.feat : tr.act[l - 1];
    Vec dprev(fan_in, 0.0);
    const double* W = w_.data() + w_off_[l];
    for (int i = 0; i < cfg_.hidden; ++i) {
      double dz = delta[i] * (1.0 - a[i] * a[i]);
      double* grow = g.data() + w_off_[l] + static_cast<size_t>(i) * fan_in;
      const double* wrow = W + static_cast<size_t>(i) * fan_in;
      for (int j = 0; j < fan_in; ++j) {
        grow[j] += dz * prev[j];
        dprev[j] += dz * wrow[j];
      }
      g[b_off_[l] + i] += dz;
    }
    delta = std::move(dprev);
  }

  // embedding rows receive the tail of the input gradient
  size_t emb_row = emb_ + static_cast<size_t>(label) * cfg_.embed;
  for (int j = 0; j < cfg_.embed; ++j)
    g[emb_row + j] += delta[cfg_.d + 2 * cfg_.freq + j];

  return loss;
}

void TrainConfig::validate() const {
  if (batch < 1 || steps < 0 || lr <= 0.0 || beta1 <= 0.0 || beta1 >= 1.0 ||
      beta2 <= 0.0 || beta2 >= 1.0 || p_drop < 0.0 || p_drop >= 1.0)
    throw std::invalid_argument("TrainConfig: invalid values");
}

VelocityNet train(const ConditionalMixture& mix, const TrainConfig& cfg,
                  std::vector<double>* loss_curve) {
  cfg.validate();
  NetConfig nc;
  nc.d = mix.d;
  nc.n_labels = mix.n_classes;
  nc.init_seed = cfg.seed;
  VelocityNet net(nc);

  std::vector<double> g(net.n_params());
  std::vector<double> m(net.n_params(), 0.0), v(net.n_params(), 0.0);
  const double eps_adam = 1e-8;
  RandomStream master(cfg.seed);

  for (int step = 0; step < cfg.steps; ++step) {
    RandomStream s = master.substream(step);
    std::fill(g.begin(), g.end(), 0.0);
    double batch_loss = 0.0;
    for (int b = 0; b < cfg.batch; ++b) {
      int cls = static_cast<int>(s.next_u64() % mix.n_classes);
      Vec x0 = sample(mix, cls, s);
      Vec eps = s.normal_vec(mix.d);
      double t = s.uniform();
      int label = (s.uniform() < cfg.p_drop) ? net.null_label() : cls;
      batch_loss += net.cfm_loss(x0, eps, t, label, &g);
    }
    batch_loss /= cfg.batch;
    if (!std::isfinite(batch_loss))
      throw std::runtime_error("train: loss diverged at step " +
                               std::to_string(step));
    if (loss_curve) loss_curve->push_back(batch_loss);

    double scale = 1.0 / cfg.batch;
    double b1t = 1.0 - std::pow(cfg.beta1, step + 1);
    double b2t = 1.0 - std::pow(cfg.beta2, step + 1);
    std::vector<double>& w = net.params();
    for (size_t i = 0; i < w.size(); ++i) {
      double gi = g[i] * scale;
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
      w[i] -= cfg.lr * (m[i] / b1t) / (std::sqrt(v[i] / b2t) + eps_adam);
    }
    require_finite(w, "train: parameters");
  }
  return net;
}

Vec tweedie(const VelocityNet& net, const Vec& x, double t, int label) {
  if (t == 0.0) return x;
  Vec v = net.forward(x, t, label);
  Vec r(x.size());
  for (size_t i = 0; i < x.size(); ++i) r[i] = x[i] - t * v[i];
  return r;
}

// ---------------------------------------------------------------------------
// Checkpoint format: "FALB", u32 version, i32 d/n_labels/hidden/layers/freq/
// embed, u64 param count, params as little-endian f64, u64 FNV-1a checksum
// over everything before it.

namespace {

constexpr std::uint32_t kVersion = 1;

std::uint64_t fnv1a(const unsigned char* data, size_t n) {
  std::uint64_t h = 1469598103934665603ULL;
  for (size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 1099511628211ULL;
  }
  return h;
}

template <typename T>
void put(std::string& buf, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  buf.append(reinterpret_cast<char*>(b), sizeof(T));
}

template <typename T>
T take(const std::string& buf, size_t& pos) {
  if (pos + sizeof(T) > buf.size())
    throw std::runtime_error("checkpoint: corrupt file (truncated)");
  T v;
  std::memcpy(&v, buf.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace

void VelocityNet::save(const std::string& path) const {
  std::string buf;
  buf.append("FALB");
  put<std::uint32_t>(buf, kVersion);
  put<std::int32_t>(buf, cfg_.d);
  put<std::int32_t>(buf, cfg_.n_labels);
  put<std::int32_t>(buf, cfg_.hidden);
  put<std::int32_t>(buf, cfg_.layers);
  put<std::int32_t>(buf, cfg_.freq);
  put<std::int32_t>(buf, cfg_.embed);
  put<std::uint64_t>(buf, w_.size());
  for (double x : w_) put<double>(buf, x);
  put<std::uint64_t>(buf, fnv1a(reinterpret_cast<const unsigned char*>(buf.data()), buf.size()));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

VelocityNet VelocityNet::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  std::string buf((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());

  if (buf.size() < 8 + 4 || buf.compare(0, 4, "FALB") != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  if (buf.size() < sizeof(std::uint64_t) + 4)
    throw std::runtime_error("checkpoint: corrupt file (truncated)");
  size_t body = buf.size() - sizeof(std::uint64_t);
  size_t pos = body;
  std::uint64_t stored = take<std::uint64_t>(buf, pos);
  if (stored != fnv1a(reinterpret_cast<const unsigned char*>(buf.data()), body))
    throw std::runtime_error("checkpoint: corrupt file (checksum mismatch)");

  pos = 4;
  std::uint32_t version = take<std::uint32_t>(buf, pos);
  if (version != kVersion)
    throw std::runtime_error("checkpoint: unsupported version " +
                             std::to_string(version));
  NetConfig cfg;
  cfg.d = take<std::int32_t>(buf, pos);
  cfg.n_labels = take<std::int32_t>(buf, pos);
  cfg.hidden = take<std::int32_t>(buf, pos);
  cfg.layers = take<std::int32_t>(buf, pos);
  cfg.freq = take<std::int32_t>(buf, pos);
  cfg.embed = take<std::int32_t>(buf, pos);
  std::uint64_t n = take<std::uint64_t>(buf, pos);

  VelocityNet net(cfg, /*zero_init=*/true);
  if (n != net.n_params())
    throw std::runtime_error("checkpoint: parameter count mismatch");
  for (std::uint64_t i = 0; i < n; ++i) net.w_[i] = take<double>(buf, pos);
  return net;
}

}  // namespace fa
