#include "remora/io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include <json.hpp>

namespace remora {

namespace {

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_i16(std::string& out, std::int16_t v) { put_u16(out, static_cast<std::uint16_t>(v)); }

void put_f32(std::string& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

class Reader {
 public:
  Reader(std::string data, std::string what) : data_(std::move(data)), what_(std::move(what)) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
  std::uint16_t u16() {
    const char* p = take(2);
    return static_cast<std::uint16_t>(static_cast<std::uint8_t>(p[0]) |
                                      (static_cast<std::uint8_t>(p[1]) << 8));
  }
  std::uint32_t u32() {
    const char* p = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(p[i])) << (8 * i);
    return v;
  }
  std::int16_t i16() { return static_cast<std::int16_t>(u16()); }
  float f32() {
    const std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  void magic(const char* expect) {
    const char* p = take(4);
    if (std::memcmp(p, expect, 4) != 0) {
      throw FormatError(what_ + ": bad magic, expected " + expect);
    }
  }
  const char* take(std::size_t n) {
    if (pos_ + n > data_.size()) throw FormatError(what_ + ": truncated file");
    const char* p = data_.data() + pos_;
    pos_ += n;
    return p;
  }
  bool at_end() const { return pos_ == data_.size(); }
  std::size_t remaining() const { return data_.size() - pos_; }
  bool peek_magic(const char* expect) const {
    return data_.size() - pos_ >= 4 && std::memcmp(data_.data() + pos_, expect, 4) == 0;
  }
  std::string rest() { return data_.substr(pos_); }
  const std::string& what() const { return what_; }

 private:
  std::string data_;
  std::string what_;
  std::size_t pos_ = 0;
};

std::string slurp(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(std::string(what) + ": cannot open " + path);
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return data;
}

// Hostile headers must fail as format errors, not as overflowing size
// arithmetic or terabyte allocations.
void check_frame_dims(int h, int w, const char* what) {
  constexpr int kMaxDim = 1 << 20;
  if (h < 1 || w < 1 || h > kMaxDim || w > kMaxDim ||
      static_cast<long long>(h) * w > (1LL << 31)) {
    throw FormatError(std::string(what) + ": implausible frame dimensions");
  }
}

void spit(const std::string& path, const std::string& data, const char* what) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(std::string(what) + ": cannot open " + path + " for writing");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError(std::string(what) + ": short write to " + path);
}

constexpr std::uint16_t kVclpVersion = 1;
constexpr std::uint16_t kGopsVersion = 1;

}  // namespace

void write_clip(const std::string& path, const VideoClip& clip) {
  if (clip.frames.empty()) throw InvalidInputError("write_clip: empty clip");
  std::string out;
  out += "VCLP";
  put_u16(out, kVclpVersion);
  put_u32(out, static_cast<std::uint32_t>(clip.height()));
  put_u32(out, static_cast<std::uint32_t>(clip.width()));
  put_u32(out, static_cast<std::uint32_t>(clip.frame_count()));
  put_u16(out, static_cast<std::uint16_t>(clip.fps));
  for (const Frame& f : clip.frames) {
    if (!f.same_shape(clip.frames[0])) throw InvalidInputError("write_clip: shape mismatch");
    out.append(reinterpret_cast<const char*>(f.data.data()), f.data.size());
  }
  spit(path, out, "VCLP");
}

VideoClip read_clip(const std::string& path) {
  Reader r(slurp(path, "VCLP"), "VCLP");
  r.magic("VCLP");
  if (r.u16() != kVclpVersion) throw FormatError("VCLP: unsupported version");
  const int h = static_cast<int>(r.u32());
  const int w = static_cast<int>(r.u32());
  const int t = static_cast<int>(r.u32());
  const int fps = r.u16();
  if (t < 1) throw FormatError("VCLP: degenerate dimensions");
  check_frame_dims(h, w, "VCLP");

  VideoClip clip;
  clip.fps = fps;
  const std::size_t frame_bytes = static_cast<std::size_t>(h) * w * 3;
  if (static_cast<std::size_t>(t) > r.remaining() / frame_bytes + 1) {
    throw FormatError("VCLP: truncated file");
  }
  for (int i = 0; i < t; ++i) {
    Frame f(h, w);
    const char* p = r.take(frame_bytes);
    std::memcpy(f.data.data(), p, frame_bytes);
    clip.frames.push_back(std::move(f));
  }
  if (!r.at_end()) throw FormatError("VCLP: trailing bytes");
  return clip;
}

void write_gop_stream(const std::string& path, const GopStream& stream) {
  const StreamHeader& h = stream.header;
  if (stream.gops.empty()) throw InvalidInputError("write_gop_stream: empty stream");
  std::string out;
  out += "GOPS";
  put_u16(out, kGopsVersion);
  put_u32(out, static_cast<std::uint32_t>(h.height));
  put_u32(out, static_cast<std::uint32_t>(h.width));
  put_u16(out, static_cast<std::uint16_t>(h.block_h));
  put_u16(out, static_cast<std::uint16_t>(h.block_w));
  put_u16(out, static_cast<std::uint16_t>(h.gop_pad_len));
  put_u32(out, static_cast<std::uint32_t>(stream.gop_count()));
  put_u16(out, static_cast<std::uint16_t>(h.fps));
  put_u16(out, static_cast<std::uint16_t>(h.quant_step));

  const int grid_h = h.height / h.block_h;
  const int grid_w = h.width / h.block_w;
  for (const Gop& gop : stream.gops) {
    if (gop.iframe.height != h.height || gop.iframe.width != h.width) {
      throw InvalidInputError("write_gop_stream: GOP does not match header dimensions");
    }
    if (gop.inter_count() != h.gop_pad_len - 1) {
      throw InvalidInputError("write_gop_stream: GOP not padded to T_g");
    }
    out.append(reinterpret_cast<const char*>(gop.iframe.data.data()), gop.iframe.data.size());
    put_u16(out, static_cast<std::uint16_t>(gop.real_length()));
    for (const MotionField& mv : gop.motion) {
      if (mv.grid_h != grid_h || mv.grid_w != grid_w) {
        throw InvalidInputError("write_gop_stream: motion grid mismatch");
      }
      for (std::int16_t d : mv.v) put_i16(out, d);
    }
    for (const Residual& res : gop.residual) {
      for (std::int16_t d : res.v) put_i16(out, d);
    }
  }
  spit(path, out, "GOPS");
}

GopStream read_gop_stream(const std::string& path) {
  Reader r(slurp(path, "GOPS"), "GOPS");
  r.magic("GOPS");
  if (r.u16() != kGopsVersion) throw FormatError("GOPS: unsupported version");

  GopStream stream;
  StreamHeader& h = stream.header;
  h.height = static_cast<int>(r.u32());
  h.width = static_cast<int>(r.u32());
  h.block_h = r.u16();
  h.block_w = r.u16();
  h.gop_pad_len = r.u16();
  const int k = static_cast<int>(r.u32());
  h.fps = r.u16();
  h.quant_step = r.u16();

  if (h.block_h < 1 || h.block_w < 1 || h.gop_pad_len < 1 || k < 1 || h.quant_step < 1) {
    throw FormatError("GOPS: degenerate header");
  }
  check_frame_dims(h.height, h.width, "GOPS");
  if (h.height % h.block_h != 0 || h.width % h.block_w != 0) {
    throw FormatError("GOPS: dimensions not divisible by block size");
  }

  const int grid_h = h.height / h.block_h;
  const int grid_w = h.width / h.block_w;
  const std::size_t frame_bytes = static_cast<std::size_t>(h.height) * h.width * 3;
  // per-GOP payload: I-frame + real_count + motion fields + residual planes
  const std::size_t gop_bytes =
      frame_bytes + 2 +
      static_cast<std::size_t>(h.gop_pad_len - 1) *
          (static_cast<std::size_t>(grid_h) * grid_w * 4 + frame_bytes * 2);
  if (static_cast<std::size_t>(k) > r.remaining() / gop_bytes + 1) {
    throw FormatError("GOPS: truncated file");
  }
  for (int g = 0; g < k; ++g) {
    Gop gop;
    gop.iframe = Frame(h.height, h.width);
    std::memcpy(gop.iframe.data.data(), r.take(frame_bytes), frame_bytes);
    const int real = r.u16();
    if (real < 1 || real > h.gop_pad_len) throw FormatError("GOPS: real_count out of range");
    for (int t = 0; t < h.gop_pad_len - 1; ++t) {
      MotionField mv(grid_h, grid_w, h.block_h, h.block_w);
      for (std::size_t i = 0; i < mv.v.size(); ++i) mv.v[i] = r.i16();
      gop.motion.push_back(std::move(mv));
      gop.pad_mask.push_back(t < real - 1);
    }
    for (int t = 0; t < h.gop_pad_len - 1; ++t) {
      Residual res(h.height, h.width);
      for (std::size_t i = 0; i < res.v.size(); ++i) {
        res.v[i] = r.i16();
        if (res.v[i] < -255 || res.v[i] > 255) throw FormatError("GOPS: residual out of range");
      }
      gop.residual.push_back(std::move(res));
    }
    stream.gops.push_back(std::move(gop));
  }
  if (!r.at_end()) throw FormatError("GOPS: trailing bytes");
  return stream;
}

void write_flows(const std::string& path, const std::vector<DenseFlow>& flows) {
  if (flows.empty()) throw InvalidInputError("write_flows: no entries");
  std::string out;
  out += "FLOW";
  put_u32(out, static_cast<std::uint32_t>(flows[0].height));
  put_u32(out, static_cast<std::uint32_t>(flows[0].width));
  put_u32(out, static_cast<std::uint32_t>(flows.size()));
  for (const DenseFlow& f : flows) {
    if (!f.same_shape(flows[0])) throw InvalidInputError("write_flows: shape mismatch");
    for (double v : f.v) put_f32(out, static_cast<float>(v));
  }
  spit(path, out, "FLOW");
}

std::vector<DenseFlow> read_flows(const std::string& path) {
  Reader r(slurp(path, "FLOW"), "FLOW");
  r.magic("FLOW");
  const int h = static_cast<int>(r.u32());
  const int w = static_cast<int>(r.u32());
  const int n = static_cast<int>(r.u32());
  if (n < 1) throw FormatError("FLOW: degenerate dimensions");
  check_frame_dims(h, w, "FLOW");
  if (static_cast<std::size_t>(n) > r.remaining() / (static_cast<std::size_t>(h) * w * 8) + 1) {
    throw FormatError("FLOW: truncated file");
  }
  std::vector<DenseFlow> flows;
  const double bound = static_cast<double>(h);
  for (int i = 0; i < n; ++i) {
    DenseFlow f(h, w);
    for (double& v : f.v) {
      v = r.f32();
      if (!std::isfinite(v) || std::abs(v) > bound) {
        throw FormatError("FLOW: entry violates the flow sanity bound");
      }
    }
    flows.push_back(std::move(f));
  }
  if (!r.at_end()) throw FormatError("FLOW: trailing bytes");
  return flows;
}

namespace {

void append_tensor_record(std::string& out, const std::vector<int>& dims,
                          const std::vector<double>& data) {
  if (dims.empty() || dims.size() > 255) throw InvalidInputError("TNSR: bad rank");
  std::size_t expect = 1;
  for (int d : dims) {
    if (d < 1) throw InvalidInputError("TNSR: nonpositive dimension");
    expect *= static_cast<std::size_t>(d);
  }
  if (expect != data.size()) throw InvalidInputError("TNSR: payload size mismatch");
  out += "TNSR";
  out.push_back(static_cast<char>(dims.size()));
  for (int d : dims) put_u32(out, static_cast<std::uint32_t>(d));
  for (double v : data) put_f32(out, static_cast<float>(v));
}

NamedTensor read_tensor_record(Reader& r) {
  r.magic("TNSR");
  const int rank = r.u8();
  if (rank < 1) throw FormatError(r.what() + ": zero-rank tensor");
  NamedTensor t;
  std::size_t n = 1;
  for (int i = 0; i < rank; ++i) {
    const int d = static_cast<int>(r.u32());
    if (d < 1) throw FormatError(r.what() + ": nonpositive dimension");
    if (n > std::numeric_limits<std::size_t>::max() / static_cast<std::size_t>(d)) {
      throw FormatError(r.what() + ": dimension overflow");
    }
    t.dims.push_back(d);
    n *= static_cast<std::size_t>(d);
  }
  if (n > r.remaining() / 4) throw FormatError(r.what() + ": truncated file");
  t.data.resize(n);
  for (std::size_t i = 0; i < n; ++i) t.data[i] = r.f32();
  return t;
}

}  // namespace

void write_tensor(const std::string& path, const std::vector<int>& dims,
                  const std::vector<double>& data) {
  std::string out;
  append_tensor_record(out, dims, data);
  spit(path, out, "TNSR");
}

NamedTensor read_tensor(const std::string& path) {
  Reader r(slurp(path, "TNSR"), "TNSR");
  NamedTensor t = read_tensor_record(r);
  if (!r.at_end()) throw FormatError("TNSR: trailing bytes");
  return t;
}

void write_tensor_archive(const std::string& path, const std::vector<NamedTensor>& tensors,
                          const std::string& meta_json) {
  if (tensors.empty()) throw InvalidInputError("TNSR archive: no tensors");
  std::string out;
  nlohmann::json names = nlohmann::json::array();
  for (const NamedTensor& t : tensors) {
    append_tensor_record(out, t.dims, t.data);
    names.push_back(t.name);
  }
  nlohmann::json manifest;
  manifest["tensors"] = names;
  manifest["meta"] = nlohmann::json::parse(meta_json);
  out += manifest.dump();
  spit(path, out, "TNSR");
}

TensorArchive read_tensor_archive(const std::string& path) {
  Reader r(slurp(path, "TNSR"), "TNSR archive");
  TensorArchive archive;
  if (!r.peek_magic("TNSR")) throw FormatError("TNSR archive: bad magic");
  while (r.peek_magic("TNSR")) archive.tensors.push_back(read_tensor_record(r));
  archive.meta_json = r.rest();
  if (archive.meta_json.empty()) throw FormatError("TNSR archive: missing manifest");

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(archive.meta_json);
  } catch (const nlohmann::json::exception&) {
    throw FormatError("TNSR archive: malformed manifest JSON");
  }
  const auto& names = manifest.at("tensors");
  if (names.size() != archive.tensors.size()) {
    throw FormatError("TNSR archive: manifest/tensor count mismatch");
  }
  for (std::size_t i = 0; i < archive.tensors.size(); ++i) {
    archive.tensors[i].name = names[i].get<std::string>();
  }
  return archive;
}

const NamedTensor& TensorArchive::find(const std::string& name) const {
  for (const NamedTensor& t : tensors) {
    if (t.name == name) return t;
  }
  throw FormatError("TNSR archive: missing tensor " + name);
}

namespace {

NamedTensor named_mat(const std::string& name, const Mat& m) {
  return NamedTensor{name, {m.rows, m.cols}, m.v};
}

NamedTensor named_vec(const std::string& name, const std::vector<double>& v) {
  return NamedTensor{name, {static_cast<int>(v.size())}, v};
}

Mat mat_from(const NamedTensor& t) {
  if (t.dims.size() != 2) throw FormatError("refiner params: expected rank-2 tensor " + t.name);
  Mat m(t.dims[0], t.dims[1]);
  m.v = t.data;
  return m;
}

}  // namespace

void save_refiner(const std::string& path, const RefinerParams& p) {
  nlohmann::json meta;
  meta["hidden"] = p.cfg.hidden;
  meta["block_h"] = p.cfg.block_h;
  meta["block_w"] = p.cfg.block_w;
  meta["n_m"] = p.cfg.n_m;
  meta["d_s"] = p.cfg.d_s;
  write_tensor_archive(path,
                       {named_mat("w1", p.w1), named_vec("b1", p.b1), named_mat("w2", p.w2),
                        named_vec("b2", p.b2), named_mat("wf", p.wf), named_vec("bf", p.bf),
                        named_mat("wt", p.wt), named_vec("bt", p.bt)},
                       meta.dump());
}

RefinerParams load_refiner(const std::string& path) {
  TensorArchive archive = read_tensor_archive(path);
  nlohmann::json meta = nlohmann::json::parse(archive.meta_json).at("meta");

  RefinerParams p;
  p.cfg.hidden = meta.at("hidden").get<int>();
  p.cfg.block_h = meta.at("block_h").get<int>();
  p.cfg.block_w = meta.at("block_w").get<int>();
  p.cfg.n_m = meta.at("n_m").get<int>();
  p.cfg.d_s = meta.at("d_s").get<int>();
  p.w1 = mat_from(archive.find("w1"));
  p.b1 = archive.find("b1").data;
  p.w2 = mat_from(archive.find("w2"));
  p.b2 = archive.find("b2").data;
  p.wf = mat_from(archive.find("wf"));
  p.bf = archive.find("bf").data;
  p.wt = mat_from(archive.find("wt"));
  p.bt = archive.find("bt").data;

  const int flow_out = p.cfg.block_h * p.cfg.block_w * 2;
  if (p.w1.rows != p.cfg.hidden || p.w1.cols != 18 || p.w2.rows != p.cfg.hidden ||
      p.wf.rows != flow_out || p.wt.rows != p.cfg.n_m * p.cfg.d_s) {
    throw FormatError("refiner params: tensor shapes do not match manifest meta");
  }
  return p;
}

}  // namespace remora
