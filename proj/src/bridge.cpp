// Copyright 2026 The segfuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "segfuse/bridge.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <unordered_set>

#include "segfuse/io.hpp"
#include "segfuse/manifest.hpp"
#include "segfuse/subprocess.hpp"

namespace segfuse {
namespace {

constexpr char kSfimMagic[4] = {'S', 'F', 'I', 'M'};

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

Deadline deadline_for(const PredictorSpec& spec) {
  auto timeout = spec.timeout.count() > 0 ? spec.timeout : default_predictor_timeout();
  return std::chrono::steady_clock::now() + timeout;
}

// Total response length once the SFPM header has arrived.
std::optional<std::size_t> sfpm_frame_size(std::span<const std::uint8_t> received) {
  if (received.size() < io::kSfpmHeaderSize) return std::nullopt;
  try {
    return io::kSfpmHeaderSize + io::decode_sfpm_header(received.first(io::kSfpmHeaderSize)).payload_bytes();
  } catch (const Error&) {
    // Let the caller see the bad header instead of waiting for more bytes.
    return received.size();
  }
}

[[noreturn]] void protocol_error(const PredictorSpec& spec, const std::string& what) {
  throw Error(Errc::ProtocolError, "predictor '" + spec.id + "': " + what);
}

}  // namespace

std::chrono::milliseconds default_predictor_timeout() {
  if (const char* env = std::getenv("SEGFUSE_PREDICTOR_TIMEOUT_MS")) {
    char* end = nullptr;
    long long v = std::strtoll(env, &end, 10);
    if (end != env && v > 0) return std::chrono::milliseconds(v);
  }
  return std::chrono::milliseconds(120000);
}

std::vector<std::uint8_t> encode_sfim(const ImageRGB& image) {
  std::vector<std::uint8_t> out;
  out.reserve(kSfimHeaderSize + image.data().size());
  out.insert(out.end(), kSfimMagic, kSfimMagic + 4);
  put_u16(out, kSfimVersion);
  put_u32(out, static_cast<std::uint32_t>(image.width()));
  put_u32(out, static_cast<std::uint32_t>(image.height()));
  out.insert(out.end(), image.data().begin(), image.data().end());
  return out;
}

SfimHeader decode_sfim_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kSfimHeaderSize) throw Error(Errc::TruncatedFile, "SFIM header truncated");
  if (std::memcmp(bytes.data(), kSfimMagic, 4) != 0) throw Error(Errc::ProtocolError, "bad SFIM magic");
  std::uint16_t version = static_cast<std::uint16_t>(bytes[4] | bytes[5] << 8);
  if (version != kSfimVersion) throw Error(Errc::ProtocolError, "unsupported SFIM version " + std::to_string(version));
  SfimHeader h{get_u32(bytes.data() + 6), get_u32(bytes.data() + 10)};
  if (h.width == 0 || h.height == 0 || h.width > 0x7fffffffu || h.height > 0x7fffffffu ||
      static_cast<double>(h.width) * h.height > 1e10)
    throw Error(Errc::ProtocolError, "SFIM dimensions out of range");
  return h;
}

ImageRGB decode_sfim(std::span<const std::uint8_t> bytes) {
  SfimHeader h = decode_sfim_header(bytes);
  if (bytes.size() - kSfimHeaderSize < h.payload_bytes()) throw Error(Errc::TruncatedFile, "SFIM payload truncated");
  auto payload = bytes.subspan(kSfimHeaderSize, h.payload_bytes());
  return ImageRGB(static_cast<int>(h.width), static_cast<int>(h.height),
                  std::vector<std::uint8_t>(payload.begin(), payload.end()));
}

ProbMap validate_response(ProbMap prob, int expected_classes, int width, int height) {
  if (prob.num_classes() != expected_classes)
    throw Error(Errc::ClassMismatch, "response has " + std::to_string(prob.num_classes()) + " classes, expected " +
                                         std::to_string(expected_classes));
  if (prob.width() != width || prob.height() != height)
    throw Error(Errc::ProtocolError, "response is " + std::to_string(prob.width()) + "x" +
                                         std::to_string(prob.height()) + ", request was " + std::to_string(width) +
                                         "x" + std::to_string(height));
  if (!prob.is_valid()) throw Error(Errc::ProtocolError, "response holds negative or non-finite values");
  const std::size_t n = prob.pixels();
  auto data = prob.data();
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int c = 0; c < expected_classes; ++c) sum += data[static_cast<std::size_t>(c) * n + i];
    if (std::abs(sum - 1.0) > kResponseSumTolerance)
      throw Error(Errc::ProtocolError, "pixel " + std::to_string(i) + " sums to " + std::to_string(sum));
    if (sum == 1.0) continue;
    for (int c = 0; c < expected_classes; ++c) {
      float& v = data[static_cast<std::size_t>(c) * n + i];
      v = static_cast<float>(v / sum);
    }
  }
  return prob;
}

ProbMap parse_response(std::span<const std::uint8_t> bytes, const PredictorSpec& spec, int width, int height) {
  if (bytes.size() < io::kSfpmHeaderSize)
    throw Error(Errc::PredictorCrash, "predictor '" + spec.id + "': response stream ended inside the header");
  io::SfpmHeader header;
  try {
    header = io::decode_sfpm_header(bytes);
  } catch (const Error& e) {
    protocol_error(spec, e.what());
  }
  if (bytes.size() - io::kSfpmHeaderSize < header.payload_bytes())
    throw Error(Errc::PredictorCrash, "predictor '" + spec.id + "': response stream ended mid-tensor");
  if (bytes.size() - io::kSfpmHeaderSize > header.payload_bytes())
    protocol_error(spec, "trailing bytes after the response");
  ProbMap prob = io::decode_sfpm(bytes);
  try {
    return validate_response(std::move(prob), spec.expected_classes, width, height);
  } catch (const Error& e) {
    throw Error(e.code(), "predictor '" + spec.id + "': " + e.what());
  }
}

ProbMap invoke_predictor(const PredictorSpec& spec, const ImageRGB& image) {
  if (image.empty()) throw Error(Errc::EmptyInput, "cannot send an empty image to a predictor");
  if (spec.command.empty()) throw Error(Errc::PredictorError, "predictor '" + spec.id + "' has no command");
  const Deadline deadline = deadline_for(spec);
  Subprocess proc(spec.command);
  const auto request = encode_sfim(image);
  if (spec.io_mode == IoMode::PerImage) {
    auto got = proc.exchange(request, {}, true, deadline);
    int status = proc.wait(deadline);
    if (status != 0)
      throw Error(Errc::PredictorCrash, "predictor '" + spec.id + "' exited with status " + std::to_string(status));
    return parse_response(got.bytes, spec, image.width(), image.height());
  }
  auto got = proc.exchange(request, sfpm_frame_size, false, deadline);
  return parse_response(got.bytes, spec, image.width(), image.height());
}

ExternalPredictor::ExternalPredictor(PredictorSpec spec) : spec_(std::move(spec)) {
  if (spec_.id.empty()) throw Error(Errc::PredictorError, "predictor id must not be empty");
  if (spec_.expected_classes < 1) throw Error(Errc::PredictorError, "predictor must declare at least one class");
  if (spec_.command.empty()) throw Error(Errc::PredictorError, "predictor '" + spec_.id + "' has no command");
}

ExternalPredictor::~ExternalPredictor() = default;

ProbMap ExternalPredictor::predict(const ImageRGB& image) const {
  std::unique_lock<std::mutex> serial_lock(serial_, std::defer_lock);
  if (!spec_.parallel_safe) serial_lock.lock();
  if (spec_.io_mode == IoMode::PerImage) return invoke_predictor(spec_, image);
  return predict_persistent(image);
}

ProbMap ExternalPredictor::predict_persistent(const ImageRGB& image) const {
  if (image.empty()) throw Error(Errc::EmptyInput, "cannot send an empty image to a predictor");
  std::unique_ptr<Subprocess> proc;
  {
    std::lock_guard lock(pool_mutex_);
    if (!idle_.empty()) {
      proc = std::move(idle_.back());
      idle_.pop_back();
    }
  }
  if (!proc) proc = std::make_unique<Subprocess>(spec_.command);

  // Any failure drops the process; the next call starts a fresh one.
  auto got = proc->exchange(encode_sfim(image), sfpm_frame_size, false, deadline_for(spec_));
  ProbMap out = parse_response(got.bytes, spec_, image.width(), image.height());
  if (!got.eof) {
    std::lock_guard lock(pool_mutex_);
    idle_.push_back(std::move(proc));
  }
  return out;
}

std::vector<PredictorSpec> load_registry(const std::filesystem::path& path) {
  const nlohmann::json doc = read_json(path);
  auto fail = [](const std::string& field, const std::string& what) -> void {
    throw Error(Errc::SchemaError, "registry field '" + field + "': " + what);
  };
  if (!doc.is_object() || !doc.contains("format") || doc["format"] != 1) fail("format", "expected 1");
  if (!doc.contains("predictors") || !doc["predictors"].is_array()) fail("predictors", "expected an array");

  std::vector<PredictorSpec> out;
  std::unordered_set<std::string> ids;
  const auto& list = doc["predictors"];
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string at = "predictors[" + std::to_string(i) + "]";
    const auto& e = list[i];
    if (!e.is_object()) fail(at, "expected an object");
    PredictorSpec spec;
    if (!e.contains("id") || !e["id"].is_string() || e["id"].get<std::string>().empty())
      fail(at + ".id", "expected a non-empty string");
    spec.id = e["id"].get<std::string>();
    if (!ids.insert(spec.id).second) fail(at + ".id", "duplicate id '" + spec.id + "'");
    if (!e.contains("command") || !e["command"].is_array() || e["command"].empty())
      fail(at + ".command", "expected a non-empty array of strings");
    for (const auto& arg : e["command"]) {
      if (!arg.is_string()) fail(at + ".command", "expected strings");
      spec.command.push_back(arg.get<std::string>());
    }
    std::filesystem::path exe(spec.command.front());
    if (exe.is_relative() && spec.command.front().find('/') != std::string::npos)
      spec.command.front() = (path.parent_path() / exe).lexically_normal().string();
    std::string mode = e.value("io_mode", std::string("per-image"));
    if (mode == "per-image")
      spec.io_mode = IoMode::PerImage;
    else if (mode == "persistent")
      spec.io_mode = IoMode::Persistent;
    else
      fail(at + ".io_mode", "expected 'per-image' or 'persistent'");
    if (e.contains("parallel_safe")) {
      if (!e["parallel_safe"].is_boolean()) fail(at + ".parallel_safe", "expected a boolean");
      spec.parallel_safe = e["parallel_safe"].get<bool>();
    }
    if (!e.contains("classes") || !e["classes"].is_number_integer() || e["classes"].get<int>() < 1)
      fail(at + ".classes", "expected an integer >= 1");
    spec.expected_classes = e["classes"].get<int>();
    if (e.contains("timeout_ms")) {
      if (!e["timeout_ms"].is_number_integer() || e["timeout_ms"].get<long long>() < 1)
        fail(at + ".timeout_ms", "expected a positive integer");
      spec.timeout = std::chrono::milliseconds(e["timeout_ms"].get<long long>());
    }
    out.push_back(std::move(spec));
  }
  return out;
}

const PredictorSpec& find_predictor(const std::vector<PredictorSpec>& registry, const std::string& id) {
  for (const PredictorSpec& s : registry)
    if (s.id == id) return s;
  throw Error(Errc::Usage, "no predictor '" + id + "' in the registry");
}

}  // namespace segfuse
