#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "remora/codec.hpp"
#include "remora/common.hpp"
#include "remora/rmr.hpp"
#include "remora/video.hpp"

namespace remora {

// All formats are little-endian. Layouts:
//   VCLP: "VCLP" u16 version=1, u32 H, u32 W, u32 T, u16 fps, T*H*W*3 u8.
//   GOPS: "GOPS" u16 version=1, u32 H, u32 W, u16 b_h, u16 b_w, u16 T_g,
//         u32 K, u16 fps, u16 q; per GOP: H*W*3 u8 I-frame, u16 real_count
//         (frames incl. I-frame), (T_g-1) motion fields of (H/b_h)*(W/b_w)
//         i16 (dy,dx) pairs, (T_g-1) residual planes of H*W*3 i16.
//   FLOW: "FLOW" u32 H, u32 W, u32 T_minus_1, per entry H*W f32 (dy,dx) pairs.
//   TNSR: "TNSR" u8 rank, u32 dims[rank], f32 row-major payload. An archive is
//         a run of TNSR records followed by a trailing JSON manifest whose
//         "tensors" array names them in order.

void write_clip(const std::string& path, const VideoClip& clip);
VideoClip read_clip(const std::string& path);

void write_gop_stream(const std::string& path, const GopStream& stream);
GopStream read_gop_stream(const std::string& path);

void write_flows(const std::string& path, const std::vector<DenseFlow>& flows);
std::vector<DenseFlow> read_flows(const std::string& path);

struct NamedTensor {
  std::string name;
  std::vector<int> dims;
  std::vector<double> data;  // stored as f32 on disk
};

void write_tensor(const std::string& path, const std::vector<int>& dims,
                  const std::vector<double>& data);
NamedTensor read_tensor(const std::string& path);

void write_tensor_archive(const std::string& path, const std::vector<NamedTensor>& tensors,
                          const std::string& meta_json = "{}");
struct TensorArchive {
  std::vector<NamedTensor> tensors;
  std::string meta_json;

  const NamedTensor& find(const std::string& name) const;
};
TensorArchive read_tensor_archive(const std::string& path);

void save_refiner(const std::string& path, const RefinerParams& params);
RefinerParams load_refiner(const std::string& path);

}  // namespace remora
