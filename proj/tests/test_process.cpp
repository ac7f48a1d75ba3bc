#include "avsync/process.h"
#include "doctest.h"

using namespace avsync;
using namespace std::chrono_literals;

TEST_CASE("run_process captures output and exit codes") {
  const auto r = run_process({"sh", "-c", "cat; echo err >&2; exit 5"}, "hello");
  CHECK(r.exit_code == 5);
  CHECK(r.stdout_text == "hello");
  CHECK(r.stderr_text == "err\n");
}

TEST_CASE("run_process handles large payloads in both directions") {
  const std::string big(1 << 20, 'x');
  const auto r = run_process({"cat"}, big);
  CHECK(r.exit_code == 0);
  CHECK(r.stdout_text.size() == big.size());
}

TEST_CASE("run_process times out and reports spawn failures") {
  try {
    run_process({"sleep", "5"}, "", 50ms);
    FAIL("expected timeout");
  } catch (const ProcessError& e) {
    CHECK(e.timed_out());
  }
  try {
    run_process({"/nonexistent/program"});
    FAIL("expected spawn failure");
  } catch (const ProcessError& e) {
    CHECK_FALSE(e.timed_out());
  }
}

TEST_CASE("split_command honours quotes") {
  CHECK(split_command("a b  c") == std::vector<std::string>{"a", "b", "c"});
  CHECK(split_command("run 'two words' \"and more\"") == std::vector<std::string>{"run", "two words", "and more"});
  CHECK(split_command("") .empty());
}
