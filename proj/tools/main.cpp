#include <atomic>
#include <csignal>
#include <iostream>

#include "cli_app.hpp"

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_interrupt(int) { g_stop.store(true); }

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGINT, on_interrupt);
  std::signal(SIGTERM, on_interrupt);
  std::vector<std::string> args(argv + 1, argv + argc);
  return psminobs::cli::run_cli(args, std::cout, std::cerr, &g_stop);
}
