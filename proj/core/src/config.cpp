#include "photos/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace photos::cli {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& where) {
  if (!obj.is_object()) throw std::runtime_error("config: " + where + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw std::runtime_error("config: unknown key \"" + it.key() + "\" in " + where);
}

template <typename T>
void get_if(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  const json root = json::parse(json_text);
  check_keys(root, {"preset", "out_dir", "jobs", "library", "train", "domain", "fab",
                    "optimize", "geometry", "performance", "wavelengths",
                    "render_wavelength_nm", "waveguide_width_cells"},
             "top level");
  RunConfig c;
  get_if(root, "preset", c.preset);
  if (c.preset != "bend" && c.preset != "mode_converter" && c.preset != "custom")
    throw std::runtime_error("config: preset must be bend, mode_converter or custom");
  get_if(root, "out_dir", c.out_dir);
  get_if(root, "jobs", c.jobs);
  if (c.jobs < 1) throw std::runtime_error("config: jobs must be >= 1");
  get_if(root, "render_wavelength_nm", c.render_wavelength_nm);
  get_if(root, "waveguide_width_cells", c.waveguide_width_cells);
  if (root.contains("wavelengths")) {
    c.wavelengths = root.at("wavelengths").get<std::vector<double>>();
    if (c.wavelengths.empty()) throw std::runtime_error("config: wavelengths empty");
  }

  if (root.contains("library")) {
    const json& j = root.at("library");
    check_keys(j, {"grid_resolution", "dir"}, "library");
    get_if(j, "grid_resolution", c.library_grid_resolution);
    get_if(j, "dir", c.library_dir);
  }
  if (root.contains("train")) {
    const json& j = root.at("train");
    check_keys(j, {"kl_weight", "learning_rate", "epochs", "rng_seed", "log_interval",
                   "eval_interval", "target_mse", "target_iou", "time_budget_sec",
                   "checkpoint", "latents", "loss_csv"},
               "train");
    get_if(j, "kl_weight", c.train.kl_weight);
    get_if(j, "learning_rate", c.train.learning_rate);
    get_if(j, "epochs", c.train.epochs);
    get_if(j, "rng_seed", c.train.rng_seed);
    get_if(j, "log_interval", c.train.log_interval);
    get_if(j, "eval_interval", c.train.eval_interval);
    get_if(j, "target_mse", c.train.target_mse);
    get_if(j, "target_iou", c.train.target_iou);
    get_if(j, "time_budget_sec", c.train.time_budget_sec);
    get_if(j, "checkpoint", c.checkpoint_file);
    get_if(j, "latents", c.latents_file);
    get_if(j, "loss_csv", c.train_loss_file);
  }
  if (root.contains("domain")) {
    const json& j = root.at("domain");
    check_keys(j, {"dx_nm", "design_nx", "design_ny", "pad_cells", "pml_cells", "pml_R0",
                   "pml_order"},
               "domain");
    get_if(j, "dx_nm", c.domain.dx_nm);
    get_if(j, "design_nx", c.domain.design_nx);
    get_if(j, "design_ny", c.domain.design_ny);
    get_if(j, "pad_cells", c.domain.pad_cells);
    get_if(j, "pml_cells", c.domain.pml_cells);
    get_if(j, "pml_R0", c.domain.pml_R0);
    get_if(j, "pml_order", c.domain.pml_order);
  }
  if (root.contains("fab")) {
    const json& j = root.at("fab");
    check_keys(j, {"mfs_nm", "msd_nm"}, "fab");
    get_if(j, "mfs_nm", c.fab.mfs_nm);
    get_if(j, "msd_nm", c.fab.msd_nm);
  }
  if (root.contains("optimize")) {
    const json& j = root.at("optimize");
    check_keys(j, {"n_f", "init_grid", "rng_seed", "max_iters", "move_limit", "eps_msd",
                   "eps_latent", "tau_start", "tau_end", "beta_proj_start", "beta_proj_max",
                   "beta_proj_growth", "beta_proj_interval", "step_tol", "init_z_std",
                   "obj_scale", "gs_scale", "gl_scale"},
               "optimize");
    get_if(j, "n_f", c.optimize.n_f);
    get_if(j, "init_grid", c.optimize.init_grid);
    get_if(j, "rng_seed", c.optimize.rng_seed);
    get_if(j, "max_iters", c.optimize.max_iters);
    get_if(j, "move_limit", c.optimize.move_limit);
    get_if(j, "eps_msd", c.optimize.eps_msd);
    get_if(j, "eps_latent", c.optimize.eps_latent);
    get_if(j, "tau_start", c.optimize.tau_start);
    get_if(j, "tau_end", c.optimize.tau_end);
    get_if(j, "beta_proj_start", c.optimize.beta_proj_start);
    get_if(j, "beta_proj_max", c.optimize.beta_proj_max);
    get_if(j, "beta_proj_growth", c.optimize.beta_proj_growth);
    get_if(j, "beta_proj_interval", c.optimize.beta_proj_interval);
    get_if(j, "step_tol", c.optimize.step_tol);
    get_if(j, "init_z_std", c.optimize.init_z_std);
    get_if(j, "obj_scale", c.optimize.obj_scale);
    get_if(j, "gs_scale", c.optimize.gs_scale);
    get_if(j, "gl_scale", c.optimize.gl_scale);
    if (c.optimize.init_grid * c.optimize.init_grid != c.optimize.n_f)
      throw std::runtime_error("config: optimize.init_grid^2 must equal optimize.n_f");
  }
  if (root.contains("geometry")) {
    const json& j = root.at("geometry");
    check_keys(j, {"nominal_scale_nm_per_unit", "beta_proj", "union_p", "clamp_sharpness",
                   "farfield_band"},
               "geometry");
    get_if(j, "nominal_scale_nm_per_unit", c.geometry.nominal_scale_nm_per_unit);
    get_if(j, "beta_proj", c.geometry.beta_proj);
    get_if(j, "union_p", c.geometry.union_p);
    get_if(j, "clamp_sharpness", c.geometry.clamp_sharpness);
    get_if(j, "farfield_band", c.geometry.farfield_band);
  }
  if (root.contains("performance")) {
    const json& j = root.at("performance");
    check_keys(j, {"transmission_cutoff_db", "reflection_cutoff_db", "weight"}, "performance");
    get_if(j, "transmission_cutoff_db", c.transmission_cutoff_db);
    get_if(j, "reflection_cutoff_db", c.reflection_cutoff_db);
    get_if(j, "weight", c.target_weight);
  }
  c.geometry.beta_proj = c.optimize.beta_proj_start;
  return c;
}

RunConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config(text);
}

std::string config_to_json(const RunConfig& c) {
  json root;
  root["preset"] = c.preset;
  root["out_dir"] = c.out_dir;
  root["jobs"] = c.jobs;
  root["render_wavelength_nm"] = c.render_wavelength_nm;
  root["waveguide_width_cells"] = c.waveguide_width_cells;
  root["wavelengths"] = c.wavelengths;
  root["library"] = {{"grid_resolution", c.library_grid_resolution}, {"dir", c.library_dir}};
  root["train"] = {{"kl_weight", c.train.kl_weight},
                   {"learning_rate", c.train.learning_rate},
                   {"epochs", c.train.epochs},
                   {"rng_seed", c.train.rng_seed},
                   {"log_interval", c.train.log_interval},
                   {"eval_interval", c.train.eval_interval},
                   {"target_mse", c.train.target_mse},
                   {"target_iou", c.train.target_iou},
                   {"time_budget_sec", c.train.time_budget_sec},
                   {"checkpoint", c.checkpoint_file},
                   {"latents", c.latents_file},
                   {"loss_csv", c.train_loss_file}};
  root["domain"] = {{"dx_nm", c.domain.dx_nm},
                    {"design_nx", c.domain.design_nx},
                    {"design_ny", c.domain.design_ny},
                    {"pad_cells", c.domain.pad_cells},
                    {"pml_cells", c.domain.pml_cells},
                    {"pml_R0", c.domain.pml_R0},
                    {"pml_order", c.domain.pml_order}};
  root["fab"] = {{"mfs_nm", c.fab.mfs_nm}, {"msd_nm", c.fab.msd_nm}};
  root["optimize"] = {{"n_f", c.optimize.n_f},
                      {"init_grid", c.optimize.init_grid},
                      {"rng_seed", c.optimize.rng_seed},
                      {"max_iters", c.optimize.max_iters},
                      {"move_limit", c.optimize.move_limit},
                      {"eps_msd", c.optimize.eps_msd},
                      {"eps_latent", c.optimize.eps_latent},
                      {"tau_start", c.optimize.tau_start},
                      {"tau_end", c.optimize.tau_end},
                      {"beta_proj_start", c.optimize.beta_proj_start},
                      {"beta_proj_max", c.optimize.beta_proj_max},
                      {"beta_proj_growth", c.optimize.beta_proj_growth},
                      {"beta_proj_interval", c.optimize.beta_proj_interval},
                      {"step_tol", c.optimize.step_tol},
                      {"init_z_std", c.optimize.init_z_std},
                      {"obj_scale", c.optimize.obj_scale},
                      {"gs_scale", c.optimize.gs_scale},
                      {"gl_scale", c.optimize.gl_scale}};
  root["geometry"] = {{"nominal_scale_nm_per_unit", c.geometry.nominal_scale_nm_per_unit},
                      {"beta_proj", c.optimize.beta_proj_start},
                      {"union_p", c.geometry.union_p},
                      {"clamp_sharpness", c.geometry.clamp_sharpness},
                      {"farfield_band", c.geometry.farfield_band}};
  root["performance"] = {{"transmission_cutoff_db", c.transmission_cutoff_db},
                         {"reflection_cutoff_db", c.reflection_cutoff_db},
                         {"weight", c.target_weight}};
  return root.dump(2);
}

}  // namespace photos::cli
