#pragma once

#include <memory>
#include <stdexcept>
#include <string>

#include "hgcn/model.hpp"

namespace hgcn {

inline constexpr int kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// JSON document holding the config, the three vocabularies and every named
/// tensor. Doubles are written in shortest round-trip form, so loading
/// restores each value bit for bit.
std::string serialize_checkpoint(HgcnModel& model);
std::unique_ptr<HgcnModel> parse_checkpoint(std::string_view text);

void save_checkpoint(HgcnModel& model, const std::string& path);
std::unique_ptr<HgcnModel> load_checkpoint(const std::string& path);

}  // namespace hgcn
