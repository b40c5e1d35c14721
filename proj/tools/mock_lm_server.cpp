// Serves the scripted mock scoring service until SIGINT/SIGTERM. Prints the
// base URL on stdout once it is listening.

#include <csignal>
#include <iostream>

#include "CLI11.hpp"
#include "flowgen/remote_lm.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Mock remote LM server"};
  std::string vocab, script, digest, host = "127.0.0.1";
  int port = 0;
  double favored = 0.9;
  app.add_option("--vocab", vocab, "Vocabulary file, one token per line")->required();
  app.add_option("--script", script, "Sentence the server favors after the last <SEP>");
  app.add_option("--favored", favored, "Probability given to the next script token");
  app.add_option("--digest", digest, "Advertise this digest instead of the real one");
  app.add_option("--host", host);
  app.add_option("--port", port, "0 picks a free port");
  CLI11_PARSE(app, argc, argv);

  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  try {
    flowgen::MockLmServer server({flowgen::load_vocabulary(vocab), script, favored, digest});
    server.start(host, port);
    std::cout << server.url() << std::endl;
    int sig = 0;
    sigwait(&set, &sig);
    server.stop();
  } catch (const std::exception& e) {
    std::cerr << "mock_lm_server: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
