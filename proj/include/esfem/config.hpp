#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace esfem {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parameters of one experiment run.  Defaults depend on the example and are
/// filled in by example_defaults().
struct RunConfig {
    std::string example;
    int level = 5;
    double c_tau = 0.005;
    double alpha = 1.0;
    double t_adapt = 1e-3;
    double epsilon = 0.0;
    double sigma = 1e-3;        // Hele-Shaw surface tension
    double diffusivity = 2.0;   // ALE example
    double t_start = 0.0;       // < 0 only for the deformation phase of ex1
    double t_end = 1.0;
    bool deturck = true;
    bool adapt = true;
    bool geometric_consistency = true;
    std::string output_dir = "output";
    int snapshots = 20;
    bool write_meshes = true;
    double sigma_ceiling = 1e4;
    double rel_tol = 1e-10;

    // disk, ex32, tent, heleshaw-disk, annulus, eccentric-annulus
    std::string surface = "disk";
    // custom example: zero, ex21, ex31, ex5, star
    std::string velocity = "zero";
    double star_amplitude = 8.0;
    int star_k = 5;
    double tent_height = 0.5;
    bool exact_flux = true;

    /// Throws ConfigError naming the offending key.
    void validate() const;
};

const std::vector<std::string>& example_ids();

/// Canonical id for an id or one of the short aliases (ex4, ex5, ex32).
/// Throws ConfigError listing the valid ids.
std::string canonical_example(std::string_view id);

RunConfig example_defaults(std::string_view id);

/// Recognised keys in documentation order.
const std::vector<std::string>& config_keys();

/// Set one key from its text value.  The example key is not accepted here.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);

using Setting = std::pair<std::string, std::string>;

/// Flat `key=value` text: tokens separated by whitespace or newlines, `#`
/// starts a comment.  Example defaults come first, then the settings of the
/// text in order, then `overrides` (which may also replace the example).
RunConfig parse_config(std::string_view text, const std::vector<Setting>& overrides = {});
RunConfig parse_config_file(const std::string& path, const std::vector<Setting>& overrides = {});

/// Round-trippable text form of a configuration.
std::string format_config(const RunConfig& config);

}  // namespace esfem
