// Copyright 2026 The segfuse Authors
// SPDX-License-Identifier: Apache-2.0

// segfuse_stub: reference predictor speaking SFIM on stdin and SFPM on stdout.
// Without --persistent it answers one request and exits; with it, it answers frames
// until stdin closes. --fault injects protocol failures for testing.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <thread>

#include <CLI11.hpp>

#include "segfuse/bridge.hpp"
#include "segfuse/io.hpp"
#include "segfuse/rng.hpp"
#include "segfuse/stubs.hpp"

using namespace segfuse;

namespace {

bool read_exact(std::uint8_t* dst, std::size_t n) {
  std::size_t got = 0;
  while (got < n) {
    const std::size_t r = std::fread(dst + got, 1, n - got, stdin);
    if (r == 0) return false;
    got += r;
  }
  return true;
}

bool write_all(const std::vector<std::uint8_t>& bytes, std::size_t n) {
  if (std::fwrite(bytes.data(), 1, n, stdout) != n) return false;
  return std::fflush(stdout) == 0;
}

// 0: served, 1: clean end of stream, 2: malformed request.
int serve_one(const StubBehavior& base, const std::string& fault, int sleep_ms) {
  std::vector<std::uint8_t> buf(kSfimHeaderSize);
  const std::size_t first = std::fread(buf.data(), 1, 1, stdin);
  if (first == 0) return 1;
  if (!read_exact(buf.data() + 1, kSfimHeaderSize - 1)) return 2;
  SfimHeader header;
  try {
    header = decode_sfim_header(buf);
  } catch (const Error&) {
    return 2;
  }
  buf.resize(kSfimHeaderSize + header.payload_bytes());
  if (!read_exact(buf.data() + kSfimHeaderSize, header.payload_bytes())) return 2;
  const ImageRGB image = decode_sfim(buf);

  if (fault == "crash") std::exit(1);
  if (sleep_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(sleep_ms));

  StubBehavior b = base;
  if (b.mode == StubMode::NoisyOracle) {
    auto bytes = image.data();
    std::string_view view(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    b.seed = splitmix64(b.seed ^ fnv1a64(view));
  }
  std::vector<std::uint8_t> out = io::encode_sfpm(stub_predict(b, image));
  std::size_t n = out.size();
  if (fault == "truncate") n = io::kSfpmHeaderSize + (n - io::kSfpmHeaderSize) / 2;
  if (fault == "bad-magic") out[0] = 'X';
  if (fault == "header-only") n = io::kSfpmHeaderSize;
  if (!write_all(out, n)) return 2;
  if (n != out.size()) std::exit(0);  // die mid-response
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"segfuse_stub: deterministic SFIM -> SFPM predictor"};
  std::string mode = "uniform";
  std::string gt_path;
  std::string fault = "none";
  StubBehavior behavior;
  bool persistent = false;
  int sleep_ms = 0;
  app.add_option("--mode", mode, "uniform | constant | noisy-oracle")
      ->check(CLI::IsMember({"uniform", "constant", "noisy-oracle"}));
  app.add_option("--classes", behavior.classes, "Class count")->required();
  app.add_option("--class", behavior.class_index, "Class for --mode constant");
  app.add_option("--gt", gt_path, "Ground-truth label PNG for --mode noisy-oracle");
  app.add_option("--p", behavior.flip_probability, "Flip probability for --mode noisy-oracle");
  app.add_option("--seed", behavior.seed, "Seed for --mode noisy-oracle (mixed with the image bytes)");
  app.add_flag("--persistent", persistent, "Serve frames until stdin closes");
  app.add_option("--fault", fault, "none | crash | truncate | header-only | bad-magic")
      ->check(CLI::IsMember({"none", "crash", "truncate", "header-only", "bad-magic"}));
  app.add_option("--sleep-ms", sleep_ms, "Delay before each response");
  CLI11_PARSE(app, argc, argv);

  try {
    behavior.mode = mode == "uniform" ? StubMode::Uniform : mode == "constant" ? StubMode::ConstantClass : StubMode::NoisyOracle;
    if (!gt_path.empty()) behavior.gt = io::read_label_png(gt_path);
    validate(behavior);
  } catch (const Error& e) {
    std::fprintf(stderr, "segfuse_stub: %s\n", e.what());
    return 2;
  }

  do {
    const int r = serve_one(behavior, fault, sleep_ms);
    if (r == 1) return persistent ? 0 : 2;
    if (r == 2) {
      std::fprintf(stderr, "segfuse_stub: malformed request\n");
      return 3;
    }
  } while (persistent);
  return 0;
}
