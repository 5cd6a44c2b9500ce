// Scripted external extractor for exercising the plugin host.
//
//   fixture_plugin <mode> [arg]
//
// Modes: echo, echo-delay <sec>, garbage, silent, wrong-first, version,
// no-features, bad-record <field>, die-on-analyze, ignore-shutdown,
// slow <sec>, wrong-id, duplicate-id, error, exit-early.

#include <chrono>
#include <csignal>
#include <cstdio>
#include <iostream>
#include <string>
#include <thread>

#include <json.hpp>

#include "mirflex/audio.h"

using nlohmann::json;

namespace {

void send(const json& message) { std::cout << message.dump() << std::endl; }

void send_raw(const std::string& line) { std::cout << line << std::endl; }

void sleep_sec(double s) { std::this_thread::sleep_for(std::chrono::duration<double>(s)); }

[[noreturn]] void hang() {
  for (;;) sleep_sec(3600);
}

json capabilities(int version = 1) {
  return {{"type", "capabilities"}, {"version", version}, {"features", {"echo"}},
          {"id_prefix", "echo-fixture"}};
}

json echo_record(double duration) {
  return {{"extractor_id", "echo-fixture"}, {"feature", "echo"}, {"start_sec", 0.0},
          {"end_sec", duration}, {"label", "echo"}, {"confidence", 1.0},
          {"metadata", json::object()}};
}

json bad_record(const std::string& field) {
  json r = echo_record(1.0);
  if (field == "confidence") r["confidence"] = 1.7;
  else if (field == "start_sec") r["start_sec"] = -1.0;
  else if (field == "end_sec") r["end_sec"] = -0.5;
  else if (field == "label") r["label"] = "";
  else if (field == "feature") r["feature"] = "";
  else if (field == "latent") r["latent"] = {1.0, "x"};
  else if (field == "extractor_id") r["extractor_id"] = "someone-else";
  else if (field == "metadata") r["metadata"] = {{"k", 3}};
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGTERM, SIG_DFL);
  const std::string mode = argc > 1 ? argv[1] : "echo";
  const std::string arg = argc > 2 ? argv[2] : "";

  if (mode == "exit-early") return 3;

  std::string line;
  if (!std::getline(std::cin, line)) return 1;
  json hello = json::parse(line, nullptr, false);
  if (hello.is_discarded() || hello.value("type", "") != "hello") return 1;

  if (mode == "garbage") {
    send_raw("this is not json");
    hang();
  }
  if (mode == "silent") hang();
  if (mode == "wrong-first") {
    send({{"type", "result"}, {"id", 0}, {"records", json::array()}});
    hang();
  }
  if (mode == "no-features") {
    send({{"type", "capabilities"}, {"version", 1}, {"features", json::array()},
          {"id_prefix", "echo-fixture"}});
    hang();
  }
  send(capabilities(mode == "version" ? 2 : 1));

  long long previous_id = -1;
  while (std::getline(std::cin, line)) {
    json msg = json::parse(line, nullptr, false);
    if (msg.is_discarded()) return 1;
    const std::string type = msg.value("type", "");
    if (type == "shutdown") {
      if (mode == "ignore-shutdown") hang();
      return 0;
    }
    if (type != "analyze") return 1;
    const long long id = msg.at("id").get<long long>();
    const std::string path = msg.at("audio_path").get<std::string>();

    if (mode == "die-on-analyze") return 0;
    if (mode == "slow") sleep_sec(std::stod(arg));
    if (mode == "echo-delay") sleep_sec(std::stod(arg));
    if (mode == "error") {
      send({{"type", "error"}, {"id", id}, {"message", "cannot read audio"}});
      continue;
    }

    long long reply_id = id;
    if (mode == "wrong-id") reply_id = id + 1;
    if (mode == "duplicate-id" && previous_id >= 0) reply_id = previous_id;
    previous_id = id;

    if (mode == "bad-record") {
      send({{"type", "result"}, {"id", reply_id}, {"records", {bad_record(arg)}}});
      continue;
    }

    double duration = 0.0;
    try {
      duration = mirflex::decode_wav(path).duration_sec();
    } catch (const std::exception& e) {
      send({{"type", "error"}, {"id", reply_id}, {"message", e.what()}});
      continue;
    }
    send({{"type", "result"}, {"id", reply_id}, {"records", {echo_record(duration)}}});
  }
  // Host closed stdin without a shutdown message.
  if (mode == "ignore-shutdown") hang();
  return 0;
}
