// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "streamkv/bench/dataset.hpp"
#include "streamkv/bench/report.hpp"
#include "streamkv/bench/scenario.hpp"
#include "streamkv/gateway/server.hpp"

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

int serve(const std::string& config_path, const std::string& host, int port, int ws_port) {
  streamkv::gateway::ServiceConfig cfg;
  if (!config_path.empty()) cfg = streamkv::gateway::load_config(config_path);
  if (!host.empty()) cfg.server.host = host;
  if (port >= 0) cfg.server.http_port = port;
  if (ws_port >= 0) cfg.server.ws_port = ws_port;
  streamkv::gateway::Server server(cfg);
  server.start();
  std::cout << "http on " << cfg.server.host << ":" << server.http_port() << ", websocket on " << cfg.server.host
            << ":" << server.ws_port() << std::endl;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  return 0;
}

int generate_data(std::uint64_t seed, std::size_t n, const std::string& out_path, bool csv) {
  const auto data = streamkv::bench::gen_dataset(seed, n);
  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw std::runtime_error("cannot write " + out_path);
    out = &file;
  }
  if (csv) *out << "open,high,low,close,volume,phase\n";
  for (const auto& r : data) {
    if (csv) {
      *out << r.open << ',' << r.high << ',' << r.low << ',' << r.close << ',' << r.volume << ','
           << streamkv::bench::to_string(r.phase) << '\n';
    } else {
      *out << r.text() << '\n';
    }
  }
  return 0;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"streaming KV-cache inference engine"};
  app.require_subcommand(1);

  std::string config_path, host;
  int port = -1, ws_port = -1;
  auto* serve_cmd = app.add_subcommand("serve", "run the HTTP/SSE/WebSocket service");
  serve_cmd->add_option("-c,--config", config_path, "JSON config file");
  serve_cmd->add_option("--host", host, "listen address");
  serve_cmd->add_option("--port", port, "HTTP port (0 = any)");
  serve_cmd->add_option("--ws-port", ws_port, "WebSocket port (0 = any)");

  std::uint64_t seed = 7;
  std::size_t n = 925;
  std::string out_path;
  bool csv = false;
  auto* gen_cmd = app.add_subcommand("generate-data", "print synthetic OHLCV records");
  gen_cmd->add_option("--seed", seed, "generator seed");
  gen_cmd->add_option("-n,--count", n, "number of records");
  gen_cmd->add_option("-o,--out", out_path, "output file (default stdout)");
  gen_cmd->add_flag("--csv", csv, "CSV instead of record text");

  streamkv::bench::ScenarioConfig sc;
  std::string mode = "stateful", run_out, run_config;
  bool no_flash = false, no_spec = false;
  std::string only_query;
  auto* run_cmd = app.add_subcommand("run", "run the streaming benchmark scenario");
  run_cmd->add_option("--mode", mode, "stateful | request_driven")->check(CLI::IsMember({"stateful", "request_driven"}));
  run_cmd->add_option("--seed", sc.seed, "dataset seed");
  run_cmd->add_option("--init", sc.init_samples, "initial samples");
  run_cmd->add_option("--iterations", sc.iterations, "iterations");
  run_cmd->add_option("--per-iter", sc.samples_per_iter, "samples added per iteration");
  run_cmd->add_option("--max-tokens", sc.max_tokens, "tokens generated per standard query");
  run_cmd->add_option("--query", only_query, "ask only this query id (Q1..Q6)");
  run_cmd->add_flag("--no-flash", no_flash, "do not register the query set as flash questions");
  run_cmd->add_flag("--no-spec", no_spec, "disable speculative exit");
  run_cmd->add_option("-c,--config", run_config, "JSON config file for model and pool settings");
  run_cmd->add_option("-o,--out", run_out, "CSV output file");

  std::string report_in;
  auto* report_cmd = app.add_subcommand("report", "summarize a scenario CSV");
  report_cmd->add_option("csv", report_in, "CSV produced by run")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*serve_cmd) return serve(config_path, host, port, ws_port);
    if (*gen_cmd) return generate_data(seed, n, out_path, csv);
    if (*run_cmd) {
      sc.mode = mode == "stateful" ? streamkv::bench::Mode::kStateful : streamkv::bench::Mode::kRequestDriven;
      sc.register_flash = !no_flash;
      sc.allow_speculative = !no_spec;
      if (!only_query.empty()) {
        std::vector<streamkv::bench::QuerySpec> picked;
        for (const auto& q : streamkv::bench::default_queries()) {
          if (q.id == only_query) picked.push_back(q);
        }
        if (picked.empty()) throw std::runtime_error("unknown query id " + only_query);
        sc.queries = picked;
      }
      streamkv::RuntimeConfig rc;
      if (!run_config.empty()) rc = streamkv::gateway::load_config(run_config).runtime;
      streamkv::Runtime rt(rc);
      const auto rep = streamkv::bench::run_scenario(rt, sc);
      const std::string text = streamkv::bench::to_csv(rep);
      if (!run_out.empty()) {
        std::ofstream(run_out) << text;
      }
      std::cout << streamkv::bench::format_summary(rep);
      return rep.valid ? 0 : 1;
    }
    if (*report_cmd) {
      std::cout << streamkv::bench::format_summary(streamkv::bench::parse_csv(read_file(report_in)));
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
