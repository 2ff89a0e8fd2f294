#pragma once

#include "epifield/amcmc.hpp"

#include <json.hpp>

#include <filesystem>

namespace epifield {

/// Chain on disk: `<stem>.bin` holds the samples column by column as
/// little-endian float64 (log posterior last), `<stem>.json` the metadata.
///
/// .bin layout: "EFCHAIN1", u64 rows, u64 cols, cols x rows samples, rows log-post.
void write_chain(const std::filesystem::path& stem, const Chain& chain,
                 const nlohmann::json& extra = nlohmann::json::object());

struct StoredChain {
  Chain chain;
  nlohmann::json extra;
};

StoredChain read_chain(const std::filesystem::path& stem);

} // namespace epifield
