#pragma once

#include <string>

#include "rsnn/network.hpp"
#include "rsnn/tensors.hpp"

namespace rsnn {

// Binary container formats, all little-endian regardless of host.
//   RSNZ  spikes      magic, u32 version=1, u32 K, T, n, then K*T*n bytes in {0,1}
//   RSNP  parameters  magic, u32 version=1, u32 n_total, n_visible, d_max,
//                     then f64 W [post][pre][delay], b, v_thr, gamma
//   RSNI  input drive magic, u32 version=1, u32 T, n, then T*n f64
// Readers bound every declared size against the actual file size before
// allocating and reject wrong magic (FormatError), short/long payloads
// (TruncationError) and out-of-range values (CorruptionError, ValidationError).

void write_spikes(const std::string& path, const SpikeTensor& spikes);
SpikeTensor read_spikes(const std::string& path);

void write_params(const std::string& path, const NetworkParams& params);
NetworkParams read_params(const std::string& path);

void write_input(const std::string& path, const InputCurrentTensor& drive);
InputCurrentTensor read_input(const std::string& path);

}  // namespace rsnn
