#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include "ipred/diffcore/params.hpp"

namespace ipred::dc {

inline constexpr const char* kCheckpointMagic = "IPMODEL1";

// On-disk layout:
//   IPMODEL1\n
//   method <tag>\n
//   trained <0|1>\n
//   meta <n>\n  followed by n lines `key=value`
//   tensors <n>\n  followed by n lines `name rank d0 .. d{rank-1} offset`
//   blob <bytes>\n
//   <little-endian float64 payload, offsets in bytes from blob start>
struct Checkpoint {
  std::string method;
  bool trained = false;
  std::map<std::string, std::string> meta;
  ParamStore params;
};

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ipred::dc
