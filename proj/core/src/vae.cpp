#include "photos/vae.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

#include "photos/grid_io.hpp"

namespace photos::vae {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Frequency scale of the sinusoidal layer; wavelengths around one normalized
/// unit resolve the library SDFs without ringing.
constexpr double kFourierSigma = 4.0;

void init_sinusoidal(nn::Dense& layer, int n_c, Rng& rng) {
  layer.W.resize(n_c, 2);
  layer.b.resize(n_c);
  for (int r = 0; r < n_c; ++r) {
    layer.W(r, 0) = kFourierSigma * rng.normal();
    layer.W(r, 1) = kFourierSigma * rng.normal();
  }
  for (int r = 0; r < n_c; ++r) layer.b(r) = rng.uniform(0.0, kTwoPi);
  layer.gW = MatrixXd::Zero(n_c, 2);
  layer.gb = VectorXd::Zero(n_c);
}

/// Cell-center coordinates of an n_x x n_x grid over [-1,1]^2, flattened
/// with column index r * n_x + c (row r = y, column c = x).
MatrixXd grid_coords(int n_x) {
  MatrixXd X(2, n_x * n_x);
  SdfGrid ref;
  ref.values.resize(n_x, n_x);
  for (int r = 0; r < n_x; ++r)
    for (int c = 0; c < n_x; ++c) {
      X(0, r * n_x + c) = ref.cell_x(c);
      X(1, r * n_x + c) = ref.cell_y(r);
    }
  return X;
}

Eigen::RowVectorXd flatten_grid(const MatrixXd& values) {
  const int n = static_cast<int>(values.rows());
  Eigen::RowVectorXd flat(n * n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) flat(r * n + c) = values(r, c);
  return flat;
}

struct ConvTrace {
  std::vector<MatrixXd> in0, pre1, act1, pre2, act2, pre3, act3;
  VectorXd flat, head_pre, head_act;
};

void conv_forward(const MatrixXd& grid, const VaeParams& p, ConvTrace& t, Vector2d* mu,
                  Vector2d* logvar) {
  t.in0 = {grid};
  t.pre1 = p.conv1.forward(t.in0);
  t.act1.resize(t.pre1.size());
  for (std::size_t i = 0; i < t.pre1.size(); ++i) t.act1[i] = nn::leaky_relu(t.pre1[i]);
  t.pre2 = p.conv2.forward(t.act1);
  t.act2.resize(t.pre2.size());
  for (std::size_t i = 0; i < t.pre2.size(); ++i) t.act2[i] = nn::leaky_relu(t.pre2[i]);
  t.pre3 = p.conv3.forward(t.act2);
  t.act3.resize(t.pre3.size());
  for (std::size_t i = 0; i < t.pre3.size(); ++i) t.act3[i] = nn::leaky_relu(t.pre3[i]);

  const int side = static_cast<int>(t.act3[0].rows());
  t.flat.resize(static_cast<long>(t.act3.size()) * side * side);
  long k = 0;
  for (const auto& ch : t.act3)
    for (int r = 0; r < side; ++r)
      for (int c = 0; c < side; ++c) t.flat(k++) = ch(r, c);

  t.head_pre = p.head1.W * t.flat + p.head1.b;
  t.head_act = nn::leaky_relu(t.head_pre);
  const VectorXd out = p.head2.W * t.head_act + p.head2.b;
  *mu = out.segment<2>(0);
  *logvar = out.segment<2>(2);
}

void conv_backward(const ConvTrace& t, VaeParams& p, const Vector2d& dmu,
                   const Vector2d& dlogvar) {
  VectorXd dout(4);
  dout << dmu(0), dmu(1), dlogvar(0), dlogvar(1);
  p.head2.gW.noalias() += dout * t.head_act.transpose();
  p.head2.gb += dout;
  VectorXd dact = p.head2.W.transpose() * dout;
  VectorXd dpre = nn::leaky_relu_grad(t.head_pre, dact);
  p.head1.gW.noalias() += dpre * t.flat.transpose();
  p.head1.gb += dpre;
  VectorXd dflat = p.head1.W.transpose() * dpre;

  const int side = static_cast<int>(t.act3[0].rows());
  std::vector<MatrixXd> dact3(t.act3.size(), MatrixXd(side, side));
  long k = 0;
  for (auto& ch : dact3)
    for (int r = 0; r < side; ++r)
      for (int c = 0; c < side; ++c) ch(r, c) = dflat(k++);

  std::vector<MatrixXd> dpre3(dact3.size());
  for (std::size_t i = 0; i < dact3.size(); ++i)
    dpre3[i] = nn::leaky_relu_grad(t.pre3[i], dact3[i]);
  auto dact2 = p.conv3.backward(t.act2, dpre3);
  std::vector<MatrixXd> dpre2(dact2.size());
  for (std::size_t i = 0; i < dact2.size(); ++i)
    dpre2[i] = nn::leaky_relu_grad(t.pre2[i], dact2[i]);
  auto dact1 = p.conv2.backward(t.act1, dpre2);
  std::vector<MatrixXd> dpre1(dact1.size());
  for (std::size_t i = 0; i < dact1.size(); ++i)
    dpre1[i] = nn::leaky_relu_grad(t.pre1[i], dact1[i]);
  p.conv1.backward(t.in0, dpre1);
}

nlohmann::json layer_shape(const char* name, long rows, long cols) {
  return {{"name", name}, {"rows", rows}, {"cols", cols}};
}

}  // namespace

VaeParams VaeParams::random_init(int n_x, std::uint64_t seed) {
  if (n_x % 8 != 0) throw std::invalid_argument("VAE grid resolution must be divisible by 8");
  Rng rng(seed);
  VaeParams p;
  p.n_x = n_x;

  init_sinusoidal(p.enc, p.n_c, rng);
  const double s1 = std::sqrt(6.0 / (p.n_z + p.n_c + p.hidden));
  p.dec1z.init(p.hidden, p.n_z, s1, rng);
  p.dec1c.init(p.hidden, p.n_c, s1, rng);
  const double s2 = std::sqrt(6.0 / (2.0 * p.hidden));
  p.dec2.init(p.hidden, p.hidden, s2, rng);
  p.dec3.init(p.hidden, p.hidden, s2, rng);
  p.dec_out.init(1, p.hidden, std::sqrt(6.0 / (p.hidden + 1.0)), rng);

  p.conv1.init(8, 1, rng);
  p.conv2.init(16, 8, rng);
  p.conv3.init(32, 16, rng);
  const int flat = 32 * (n_x / 8) * (n_x / 8);
  p.head1.init(64, flat, std::sqrt(6.0 / flat), rng);
  p.head2.init(4, 64, 0.01, rng);
  return p;
}

void VaeParams::zero_grads() {
  enc.zero_grad();
  dec1z.zero_grad();
  dec1c.zero_grad();
  dec2.zero_grad();
  dec3.zero_grad();
  dec_out.zero_grad();
  conv1.zero_grad();
  conv2.zero_grad();
  conv3.zero_grad();
  head1.zero_grad();
  head2.zero_grad();
}

std::vector<nn::TensorRef> VaeParams::collect() {
  std::vector<nn::TensorRef> refs;
  enc.collect(refs);
  dec1z.collect(refs);
  dec1c.collect(refs);
  dec2.collect(refs);
  dec3.collect(refs);
  dec_out.collect(refs);
  conv1.collect(refs);
  conv2.collect(refs);
  conv3.collect(refs);
  head1.collect(refs);
  head2.collect(refs);
  return refs;
}

void VaeParams::validate() const {
  if (n_z != 2) throw std::runtime_error("VAE latent dimension must be 2");
  if (enc.W.rows() != n_c || enc.W.cols() != 2) throw std::runtime_error("bad enc shape");
  if (dec1z.W.rows() != hidden || dec1c.W.cols() != n_c)
    throw std::runtime_error("bad decoder input shapes");
  auto finite = [](const MatrixXd& m) { return m.allFinite(); };
  if (!finite(enc.W) || !finite(dec1z.W) || !finite(dec1c.W) || !finite(dec2.W) ||
      !finite(dec3.W) || !finite(dec_out.W))
    throw std::runtime_error("non-finite VAE weights");
}

void conv_encode(const MatrixXd& grid_values, const VaeParams& params, Vector2d* mu,
                 Vector2d* logvar) {
  if (grid_values.rows() != params.n_x || grid_values.cols() != params.n_x)
    throw std::invalid_argument("conv_encode: grid does not match VAE resolution");
  ConvTrace t;
  conv_forward(grid_values, params, t, mu, logvar);
}

MatrixXd implicit_encode(const MatrixXd& X, const VaeParams& params) {
  if (X.rows() != 2) throw std::invalid_argument("implicit_encode: X must be 2 x n");
  return (((params.enc.W * X).colwise() + params.enc.b).array().sin()).matrix();
}

DecodeTrace decode_trace(const VaeParams& params, const Vector2d& z, const MatrixXd& X) {
  if (X.rows() != 2) throw std::invalid_argument("decode: X must be 2 x n");
  DecodeTrace t;
  t.A = (params.enc.W * X).colwise() + params.enc.b;
  t.C = t.A.array().sin();
  const VectorXd u = params.dec1z.W * z + params.dec1z.b + params.dec1c.b;
  t.H1 = (((params.dec1c.W * t.C).colwise() + u).array().tanh()).matrix();
  t.H2 = (((params.dec2.W * t.H1).colwise() + params.dec2.b).array().tanh()).matrix();
  t.H3 = (((params.dec3.W * t.H2).colwise() + params.dec3.b).array().tanh()).matrix();
  t.phi = (params.dec_out.W * t.H3).row(0).array() + params.dec_out.b(0);
  return t;
}

VectorXd decode(const VaeParams& params, const Vector2d& z, const MatrixXd& X) {
  return decode_trace(params, z, X).phi.transpose();
}

void decode_vjp(const VaeParams& params, const Vector2d& z, const MatrixXd& X,
                const DecodeTrace& t, const VectorXd& cotangent, Vector2d* grad_z,
                MatrixXd* grad_x) {
  (void)z;
  const long n = X.cols();
  if (cotangent.size() != n) throw std::invalid_argument("decode_vjp: cotangent size mismatch");

  MatrixXd d3 = (params.dec_out.W.transpose() * cotangent.transpose()).array() *
                (1.0 - t.H3.array().square());
  MatrixXd d2 = (params.dec3.W.transpose() * d3).array() * (1.0 - t.H2.array().square());
  MatrixXd d1 = (params.dec2.W.transpose() * d2).array() * (1.0 - t.H1.array().square());
  if (grad_z) *grad_z = params.dec1z.W.transpose() * d1.rowwise().sum();
  if (grad_x) {
    MatrixXd dA = (params.dec1c.W.transpose() * d1).array() * t.A.array().cos();
    *grad_x = params.enc.W.transpose() * dA;
  }
}

double gaussian_kl(const Vector2d& mu, const Vector2d& logvar) {
  double kl = 0.0;
  for (int k = 0; k < 2; ++k)
    kl += -0.5 * (1.0 + logvar(k) - mu(k) * mu(k) - std::exp(logvar(k)));
  return kl;
}

double vae_loss(const std::vector<SdfGrid>& grids, const VaeParams& params, Rng& rng,
                double kl_weight, bool sample_posterior, double* recon_mse,
                double* kl_sum) {
  if (grids.empty()) throw std::invalid_argument("vae_loss: empty training set");
  const int n_x = grids[0].resolution();
  const MatrixXd X = grid_coords(n_x);
  double se = 0.0, kl = 0.0;
  for (const auto& grid : grids) {
    Vector2d mu, logvar;
    conv_encode(grid.values, params, &mu, &logvar);
    Vector2d z = mu;
    if (sample_posterior)
      for (int k = 0; k < 2; ++k) z(k) += std::exp(0.5 * logvar(k)) * rng.normal();
    const VectorXd phi_hat = decode(params, z, X);
    se += (phi_hat.transpose() - flatten_grid(grid.values)).squaredNorm();
    kl += gaussian_kl(mu, logvar);
  }
  const double mse = se / (static_cast<double>(grids.size()) * n_x * n_x);
  if (recon_mse) *recon_mse = mse;
  if (kl_sum) *kl_sum = kl;
  const double loss = mse + kl_weight * kl;
  if (!std::isfinite(loss)) throw std::runtime_error("vae_loss: non-finite loss");
  return loss;
}

TrainResult train(const shapes::Library& library, const TrainConfig& config) {
  const int n_L = library.size();
  if (n_L == 0 || library.grids.size() != static_cast<std::size_t>(n_L))
    throw std::invalid_argument("train: library must be rasterized");
  const int n_x = library.grids[0].resolution();
  const long n_p = static_cast<long>(n_x) * n_x;

  // Distinct stream for reparameterization noise so it does not replay the
  // weight-init draws.
  Rng rng(config.rng_seed ^ 0x9e3779b97f4a7c15ULL);
  VaeParams p = VaeParams::random_init(n_x, config.rng_seed);

  const MatrixXd X = grid_coords(n_x);
  std::vector<Eigen::RowVectorXd> targets(n_L);
  for (int j = 0; j < n_L; ++j) targets[j] = flatten_grid(library.grids[j].values);

  auto refs = p.collect();
  nn::Adam adam(config.learning_rate);

  TrainResult result;
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  // Deterministic evaluation at z = mu: total MSE plus worst zero-level IoU.
  auto evaluate = [&](double* out_mse, double* out_min_iou) {
    double se = 0.0, min_iou = 1.0;
    for (int j = 0; j < n_L; ++j) {
      Vector2d mu, logvar;
      conv_encode(library.grids[j].values, p, &mu, &logvar);
      const VectorXd phi_hat = decode(p, mu, X);
      se += (phi_hat.transpose() - targets[j]).squaredNorm();
      long inter = 0, uni = 0;
      for (long k = 0; k < n_p; ++k) {
        const bool a = phi_hat(k) > 0.0;
        const bool b = targets[j](k) > 0.0;
        inter += (a && b);
        uni += (a || b);
      }
      min_iou = std::min(min_iou, uni > 0 ? double(inter) / double(uni) : 1.0);
    }
    *out_mse = se / (double(n_L) * n_p);
    *out_min_iou = min_iou;
  };

  const double dphi_scale = 2.0 / (double(n_L) * n_p);
  MatrixXd A, C, cosA, D1C, H1, H2, H3, d3, d2, d1, D1sum, dC, dA;
  Eigen::RowVectorXd phi_hat, resid;
  std::vector<ConvTrace> conv_traces(n_L);
  std::vector<Vector2d> mus(n_L), logvars(n_L);

  long epoch = 0;
  bool stopped_early = false;
  for (; epoch < config.epochs; ++epoch) {
    p.zero_grads();

    A = (p.enc.W * X).colwise() + p.enc.b;
    C = A.array().sin();
    cosA = A.array().cos();
    D1C.noalias() = p.dec1c.W * C;
    D1sum = MatrixXd::Zero(p.hidden, n_p);

    double se = 0.0, kl = 0.0;
    for (int j = 0; j < n_L; ++j) {
      conv_forward(library.grids[j].values, p, conv_traces[j], &mus[j], &logvars[j]);
      Vector2d eta;
      eta << rng.normal(), rng.normal();
      Vector2d sigma = (0.5 * logvars[j].array()).exp();
      const Vector2d z = mus[j] + sigma.cwiseProduct(eta);

      const VectorXd u = p.dec1z.W * z + p.dec1z.b + p.dec1c.b;
      H1 = ((D1C.colwise() + u).array().tanh()).matrix();
      H2 = (((p.dec2.W * H1).colwise() + p.dec2.b).array().tanh()).matrix();
      H3 = (((p.dec3.W * H2).colwise() + p.dec3.b).array().tanh()).matrix();
      phi_hat = (p.dec_out.W * H3).row(0).array() + p.dec_out.b(0);

      resid = phi_hat - targets[j];
      se += resid.squaredNorm();
      kl += gaussian_kl(mus[j], logvars[j]);

      const Eigen::RowVectorXd dphi = dphi_scale * resid;
      d3 = (p.dec_out.W.transpose() * dphi).array() * (1.0 - H3.array().square());
      p.dec_out.gW.noalias() += dphi * H3.transpose();
      p.dec_out.gb(0) += dphi.sum();
      d2 = (p.dec3.W.transpose() * d3).array() * (1.0 - H2.array().square());
      p.dec3.gW.noalias() += d3 * H2.transpose();
      p.dec3.gb.noalias() += d3.rowwise().sum();
      d1 = (p.dec2.W.transpose() * d2).array() * (1.0 - H1.array().square());
      p.dec2.gW.noalias() += d2 * H1.transpose();
      p.dec2.gb.noalias() += d2.rowwise().sum();
      D1sum += d1;

      const VectorXd d1_row = d1.rowwise().sum();
      p.dec1z.gW.noalias() += d1_row * z.transpose();
      p.dec1z.gb.noalias() += d1_row;
      const Vector2d dz = p.dec1z.W.transpose() * d1_row;

      const Vector2d dmu = dz + config.kl_weight * mus[j];
      Vector2d dlv;
      for (int k = 0; k < 2; ++k)
        dlv(k) = dz(k) * eta(k) * 0.5 * sigma(k) -
                 0.5 * config.kl_weight * (1.0 - std::exp(logvars[j](k)));
      conv_backward(conv_traces[j], p, dmu, dlv);
    }

    p.dec1c.gW.noalias() += D1sum * C.transpose();
    p.dec1c.gb.noalias() += D1sum.rowwise().sum();
    dC.noalias() = p.dec1c.W.transpose() * D1sum;
    dA = dC.array() * cosA.array();
    p.enc.gW.noalias() += dA * X.transpose();
    p.enc.gb.noalias() += dA.rowwise().sum();

    const double loss = se / (double(n_L) * n_p) + config.kl_weight * kl;
    if (!std::isfinite(loss))
      throw std::runtime_error("VAE training diverged (non-finite loss) at epoch " +
                               std::to_string(epoch));

    adam.step(refs);

    const long log_every = std::max<long>(1, config.log_interval);
    const bool log_now = (epoch % log_every == 0) || epoch + 1 == config.epochs;
    const bool eval_now = config.eval_interval > 0 &&
                          ((epoch + 1) % config.eval_interval == 0 || epoch + 1 == config.epochs);
    TrainLogEntry entry{epoch, loss, se / (double(n_L) * n_p), kl, -1.0, -1.0};
    if (eval_now) {
      evaluate(&entry.eval_mse, &entry.eval_min_iou);
      result.final_mse = entry.eval_mse;
      result.final_min_iou = entry.eval_min_iou;
      const bool thresholds_on = config.target_mse > 0.0 && config.target_iou > 0.0;
      if (thresholds_on && entry.eval_mse < config.target_mse &&
          entry.eval_min_iou >= config.target_iou)
        stopped_early = true;
      if (config.time_budget_sec > 0.0 && elapsed() > config.time_budget_sec)
        stopped_early = true;  // budget guard, result may be below target
    }
    if (log_now || eval_now) result.log.push_back(entry);
    if (stopped_early) {
      ++epoch;
      break;
    }
  }

  result.epochs_run = epoch;
  if (result.final_mse == 0.0 && result.final_min_iou == 0.0)
    evaluate(&result.final_mse, &result.final_min_iou);

  // Latent table from the posterior means, then retire the conv encoder.
  result.latents.z_star.resize(n_L, 2);
  for (int j = 0; j < n_L; ++j) {
    Vector2d mu, logvar;
    conv_encode(library.grids[j].values, p, &mu, &logvar);
    result.latents.z_star.row(j) = mu.transpose();
    result.latents.names.push_back(library.shapes[j].name);
  }
  p.encoder_discarded = true;
  result.params = std::move(p);
  return result;
}

void save_checkpoint(const std::filesystem::path& path, const VaeParams& params,
                     const TrainConfig& config, long epoch) {
  VaeParams copy = params;
  auto refs = copy.collect();

  nlohmann::json header;
  header["n_x"] = params.n_x;
  header["n_z"] = params.n_z;
  header["n_c"] = params.n_c;
  header["hidden"] = params.hidden;
  header["encoder_discarded"] = params.encoder_discarded;
  header["epoch"] = epoch;
  header["config"] = {{"kl_weight", config.kl_weight},
                      {"learning_rate", config.learning_rate},
                      {"epochs", config.epochs},
                      {"rng_seed", config.rng_seed},
                      {"log_interval", config.log_interval},
                      {"eval_interval", config.eval_interval},
                      {"target_mse", config.target_mse},
                      {"target_iou", config.target_iou}};
  header["layers"] = nlohmann::json::array();
  header["layers"].push_back(layer_shape("enc.W", params.enc.W.rows(), params.enc.W.cols()));
  header["layers"].push_back(layer_shape("dec1z.W", params.dec1z.W.rows(), params.dec1z.W.cols()));
  header["layers"].push_back(layer_shape("dec1c.W", params.dec1c.W.rows(), params.dec1c.W.cols()));
  header["layers"].push_back(layer_shape("dec2.W", params.dec2.W.rows(), params.dec2.W.cols()));
  header["layers"].push_back(layer_shape("dec3.W", params.dec3.W.rows(), params.dec3.W.cols()));
  header["layers"].push_back(layer_shape("dec_out.W", params.dec_out.W.rows(), params.dec_out.W.cols()));

  const std::string header_str = header.dump();
  std::vector<std::uint8_t> out;
  out.insert(out.end(), {'V', 'A', 'E', '1'});
  detail::put_u32(out, static_cast<std::uint32_t>(header_str.size()));
  out.insert(out.end(), header_str.begin(), header_str.end());
  for (const auto& ref : refs)
    for (std::size_t i = 0; i < ref.size; ++i) detail::put_f64(out, ref.value[i]);
  detail::write_all(path, out);
}

VaeParams load_checkpoint(const std::filesystem::path& path, TrainConfig* config,
                          long* epoch) {
  auto bytes = detail::read_all(path);
  if (bytes.size() < 8 || std::memcmp(bytes.data(), "VAE1", 4) != 0)
    throw std::runtime_error(path.string() + ": not a VAE1 checkpoint");
  const std::uint8_t* ptr = bytes.data() + 4;
  const std::uint32_t header_len = detail::get_u32(ptr);
  if (bytes.size() < 8 + header_len)
    throw std::runtime_error(path.string() + ": truncated checkpoint header");
  nlohmann::json header =
      nlohmann::json::parse(ptr, ptr + header_len);
  ptr += header_len;

  VaeParams p = VaeParams::random_init(header.at("n_x").get<int>(), 0);
  p.encoder_discarded = header.at("encoder_discarded").get<bool>();
  auto refs = p.collect();
  std::size_t total = 0;
  for (const auto& r : refs) total += r.size;
  if (bytes.size() != 8 + header_len + total * 8)
    throw std::runtime_error(path.string() + ": checkpoint blob size mismatch");
  for (auto& r : refs)
    for (std::size_t i = 0; i < r.size; ++i) r.value[i] = detail::get_f64(ptr);
  p.validate();

  if (config) {
    const auto& jc = header.at("config");
    config->kl_weight = jc.at("kl_weight").get<double>();
    config->learning_rate = jc.at("learning_rate").get<double>();
    config->epochs = jc.at("epochs").get<long>();
    config->rng_seed = jc.at("rng_seed").get<std::uint64_t>();
  }
  if (epoch) *epoch = header.at("epoch").get<long>();
  return p;
}

void save_latents_csv(const std::filesystem::path& path, const LatentTable& table) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "shape_name,z1,z2\n";
  char buf[80];
  for (long j = 0; j < table.z_star.rows(); ++j) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g", table.z_star(j, 0), table.z_star(j, 1));
    out << table.names[j] << "," << buf << "\n";
  }
}

LatentTable load_latents_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("shape_name,", 0) != 0)
    throw std::runtime_error(path.string() + ": bad latent CSV header");
  LatentTable table;
  std::vector<std::pair<double, double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw std::runtime_error(path.string() + ": bad latent CSV row: " + line);
    table.names.push_back(line.substr(0, c1));
    rows.emplace_back(std::stod(line.substr(c1 + 1, c2 - c1 - 1)),
                      std::stod(line.substr(c2 + 1)));
  }
  table.z_star.resize(static_cast<long>(rows.size()), 2);
  for (std::size_t j = 0; j < rows.size(); ++j) {
    table.z_star(static_cast<long>(j), 0) = rows[j].first;
    table.z_star(static_cast<long>(j), 1) = rows[j].second;
  }
  return table;
}

}  // namespace photos::vae
