#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "photos/nn.hpp"
#include "photos/shapes.hpp"

namespace photos::vae {

using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXd;

/// Weights of the convo-implicit VAE. The implicit encoder (one sinusoidal
/// layer) and the decoder stack are the inference surface; the convolutional
/// encoder exists to place the library in latent space during training and is
/// flagged discarded afterwards.
struct VaeParams {
  int n_x = 64;
  int n_z = 2;   // fixed at 2
  int n_c = 64;  // implicit feature width
  int hidden = 128;

  nn::Dense enc;           // n_c x 2, sinusoidal activation
  nn::Dense dec1z;         // hidden x n_z
  nn::Dense dec1c;         // hidden x n_c
  nn::Dense dec2, dec3;    // hidden x hidden, tanh
  nn::Dense dec_out;       // 1 x hidden, linear

  nn::Conv2 conv1, conv2, conv3;  // 1->8->16->32 channels, stride 2
  nn::Dense head1;                // 64 x (32 * (n_x/8)^2), leaky relu
  nn::Dense head2;                // 4 x 64 -> (mu, logvar)

  bool encoder_discarded = false;

  static VaeParams random_init(int n_x, std::uint64_t seed);
  void zero_grads();
  /// Parameter tensors in blob order. Training-only tensors come last so the
  /// inference prefix is stable.
  std::vector<nn::TensorRef> collect();
  void validate() const;
};

/// Posterior means of the library shapes after training.
struct LatentTable {
  std::vector<std::string> names;
  MatrixXd z_star;  // n_L x 2
};

struct TrainConfig {
  double kl_weight = 5e-8;
  double learning_rate = 5e-4;
  long epochs = 40000;
  std::uint64_t rng_seed = 0;
  long log_interval = 100;
  long eval_interval = 250;
  // Early-stop thresholds on the deterministic (z = mu) reconstruction;
  // both must hold. Values <= 0 disable early stopping.
  double target_mse = 1e-3;
  double target_iou = 0.95;
  // Hard wall-clock guard; 0 disables. Training stops at the next eval.
  double time_budget_sec = 0.0;
};

struct TrainLogEntry {
  long epoch;
  double loss, recon_mse, kl;
  double eval_mse = -1.0, eval_min_iou = -1.0;  // -1 when no eval ran
};

struct TrainResult {
  VaeParams params;
  LatentTable latents;
  std::vector<TrainLogEntry> log;
  long epochs_run = 0;
  double final_mse = 0.0, final_min_iou = 0.0;
};

/// Convolutional posterior for one grid.
void conv_encode(const MatrixXd& grid_values, const VaeParams& params, Vector2d* mu,
                 Vector2d* logvar);

/// Sinusoidal coordinate features; X is 2 x n, result n_c x n.
MatrixXd implicit_encode(const MatrixXd& X, const VaeParams& params);

/// Saved activations of one decode pass, consumed by decode_vjp.
struct DecodeTrace {
  MatrixXd A, C, H1, H2, H3;
  Eigen::RowVectorXd phi;
};

DecodeTrace decode_trace(const VaeParams& params, const Vector2d& z, const MatrixXd& X);
VectorXd decode(const VaeParams& params, const Vector2d& z, const MatrixXd& X);

/// Vector-Jacobian products of decode w.r.t. z and X for a scalar cotangent
/// per query point. grad_x has the shape of X.
void decode_vjp(const VaeParams& params, const Vector2d& z, const MatrixXd& X,
                const DecodeTrace& trace, const VectorXd& cotangent, Vector2d* grad_z,
                MatrixXd* grad_x);

/// Full VAE loss: mean squared reconstruction error over all shapes and
/// pixels plus kl_weight times the summed diagonal-Gaussian KL. Sampling uses
/// the reparameterization trick; sample_posterior=false forces sigma = 0.
double vae_loss(const std::vector<SdfGrid>& grids, const VaeParams& params, Rng& rng,
                double kl_weight, bool sample_posterior = true,
                double* recon_mse = nullptr, double* kl_sum = nullptr);

/// Closed-form KL(N(mu, sigma^2) || N(0,1)) summed over dimensions.
double gaussian_kl(const Vector2d& mu, const Vector2d& logvar);

TrainResult train(const shapes::Library& library, const TrainConfig& config);

/// Checkpoint: magic "VAE1", u32 JSON header length, JSON header (layer
/// shapes, config, seed, epoch), then LE float64 weight blob in header order.
void save_checkpoint(const std::filesystem::path& path, const VaeParams& params,
                     const TrainConfig& config, long epoch);
VaeParams load_checkpoint(const std::filesystem::path& path, TrainConfig* config = nullptr,
                          long* epoch = nullptr);

void save_latents_csv(const std::filesystem::path& path, const LatentTable& table);
LatentTable load_latents_csv(const std::filesystem::path& path);

}  // namespace photos::vae
