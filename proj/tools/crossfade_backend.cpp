// Protocol server wrapping the in-process crossfade backend. Reads one JSON
// request from stdin and writes one JSON reply to stdout. The extra flags
// simulate misbehaving generators.
#include <chrono>
#include <iostream>
#include <iterator>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "avsync/generate.h"
#include "avsync/protocol.h"

int main(int argc, char** argv) {
  CLI::App app{"Crossfade generator backend speaking the avsync JSON protocol"};
  int sleep_ms = 0;
  std::string fail_op;
  int fail_status = 4;
  bool garbage = false;
  app.add_option("--sleep-ms", sleep_ms, "Delay before replying");
  app.add_option("--fail-op", fail_op, "Fail requests with this op ('any' fails all)");
  app.add_option("--fail-status", fail_status, "Exit status used by --fail-op");
  app.add_flag("--garbage", garbage, "Reply with text that is not JSON");
  CLI11_PARSE(app, argc, argv);

  const std::string input((std::istreambuf_iterator<char>(std::cin)), std::istreambuf_iterator<char>());
  if (sleep_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(sleep_ms));

  nlohmann::json request;
  try {
    request = nlohmann::json::parse(input);
  } catch (const nlohmann::json::exception& e) {
    std::cout << nlohmann::json{{"error", std::string("bad request: ") + e.what()}}.dump() << '\n';
    return 2;
  }
  const std::string op = request.value("op", std::string());
  if (!fail_op.empty() && (fail_op == "any" || fail_op == op)) {
    std::cerr << "simulated failure on op '" << op << "'\n";
    return fail_status;
  }
  if (garbage) {
    std::cout << "this is not json\n";
    return 0;
  }

  avsync::CrossfadeBackend backend;
  const auto reply = avsync::protocol::serve(request, backend);
  std::cout << reply.dump() << '\n';
  return reply.contains("error") ? 1 : 0;
}
