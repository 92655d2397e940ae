#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "photos/fdfd.hpp"
#include "photos/geometry.hpp"
#include "photos/optimize.hpp"
#include "photos/vae.hpp"

namespace photos::cli {

/// Full run configuration. Every default mirrors the reference experiment
/// setup (80x80 design cells at 20 nm, 36 instances on a 6x6 grid, seed 27,
/// MFS 40 nm / MSD 60 nm, O-band wavelength pairs, -0.5 dB / -20 dB targets).
struct RunConfig {
  std::string preset = "bend";  // bend | mode_converter | custom
  std::string out_dir = "out";
  int jobs = 1;

  int library_grid_resolution = 64;
  std::string library_dir = "library";

  vae::TrainConfig train;
  std::string checkpoint_file = "vae_checkpoint.bin";
  std::string latents_file = "latents.csv";
  std::string train_loss_file = "train_loss.csv";

  fdfd::SimDomain domain;
  opt::FabSpec fab;
  opt::OptConfig optimize;
  geom::GeometryConfig geometry;

  double transmission_cutoff_db = -0.5;
  double reflection_cutoff_db = -20.0;
  double target_weight = 0.1;
  std::vector<double> wavelengths = {1265, 1270, 1275, 1285, 1290, 1295};
  double render_wavelength_nm = 1280.0;
  int waveguide_width_cells = 20;  // 400 nm at the default pitch

  std::filesystem::path resolve(const std::string& name) const {
    std::filesystem::path p(name);
    return p.is_absolute() ? p : std::filesystem::path(out_dir) / p;
  }
};

/// Strict parse: unknown keys anywhere raise std::runtime_error.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config_file(const std::filesystem::path& path);
std::string config_to_json(const RunConfig& config);

}  // namespace photos::cli
