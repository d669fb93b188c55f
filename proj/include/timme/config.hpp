#ifndef TIMME_CONFIG_HPP
#define TIMME_CONFIG_HPP

#include "timme/train.hpp"

#include <string>

namespace timme {

/// Flat "key = value" config file, UTF-8, '#' comments. Unknown keys are
/// rejected. Keys mirror TrainConfig fields; list values are comma-separated.
TrainConfig load_config_file(const std::string& path);

/// Applies one key/value pair (config line or CLI override). Throws on
/// unknown keys or unparseable values.
void apply_config_entry(TrainConfig& cfg, const std::string& key, const std::string& value);

/// Canonical serialization used for the config digest: sorted "key = value"
/// lines covering every field.
std::string canonical_config(const TrainConfig& cfg);

}  // namespace timme

#endif  // TIMME_CONFIG_HPP
