#pragma once

// Uniform driver for systems under test (SUTs).
//
// In-process SUTs run the solver pipeline with an optional seeded fault.
// External SUTs are programs invoked without a shell:
//
//   <argv...> <dataset.csv>
//
// The dataset CSV (see io.hpp) and its JSON sidecar are written to a fresh
// temporary path. The program must print the coefficients on stdout as
// whitespace-separated decimals, intercept first, and exit with status 0.
// Every execution is classified into exactly one OutcomeStatus.

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "mtlr/io.hpp"
#include "mtlr/solver.hpp"

extern char** environ;

namespace mtlr {

using Nanos = std::chrono::nanoseconds;

enum class OutcomeStatus { ok, crash, non_numeric, wrong_size, timeout, empty };

inline const char* to_string(OutcomeStatus s) {
  switch (s) {
    case OutcomeStatus::ok: return "ok";
    case OutcomeStatus::crash: return "crash";
    case OutcomeStatus::non_numeric: return "non_numeric";
    case OutcomeStatus::wrong_size: return "wrong_size";
    case OutcomeStatus::timeout: return "timeout";
    case OutcomeStatus::empty: return "empty";
  }
  return "?";
}

struct SutOutcome {
  OutcomeStatus status = OutcomeStatus::crash;
  /// Set iff status == ok; delta is left at zero.
  std::optional<Estimator> estimator;
  std::string detail;
  std::size_t expected_size = 0;
  std::size_t got_size = 0;
  Nanos runtime{0};

  bool ok() const { return status == OutcomeStatus::ok; }
};

struct InProcessSut {
  Fault fault = Fault::none;
};

struct ExternalSut {
  std::vector<std::string> argv;
};

struct SutHandle {
  std::string name = "reference";
  std::variant<InProcessSut, ExternalSut> kind = InProcessSut{};
  double timeout_factor = 1000.0;
  Nanos baseline_runtime{0};
  /// Lower limit on the deadline; absorbs scheduler jitter and process start-up.
  Nanos min_deadline = std::chrono::milliseconds(20);

  bool external() const { return std::holds_alternative<ExternalSut>(kind); }

  Nanos deadline() const {
    const auto scaled = Nanos(static_cast<Nanos::rep>(timeout_factor * static_cast<double>(baseline_runtime.count())));
    return std::max(scaled, min_deadline);
  }
};

/// MTLR_TIMEOUT_FACTOR when set to a number > 1, else `fallback`.
inline double timeout_factor_from_env(double fallback = 1000.0) {
  if (const char* env = std::getenv("MTLR_TIMEOUT_FACTOR")) {
    if (const auto v = parse_double(env); v && *v > 1.0) return *v;
  }
  return fallback;
}

inline SutHandle reference_sut() {
  SutHandle h;
  h.timeout_factor = timeout_factor_from_env();
  return h;
}

inline SutHandle in_process_sut(std::string name, Fault fault) {
  SutHandle h = reference_sut();
  h.name = std::move(name);
  h.kind = InProcessSut{fault};
  return h;
}

inline SutHandle external_sut(std::vector<std::string> argv) {
  if (argv.empty()) throw InvalidArgument("external SUT needs a command");
  SutHandle h = reference_sut();
  std::string name;
  for (const auto& a : argv) name += (name.empty() ? "" : " ") + a;
  h.name = std::move(name);
  h.kind = ExternalSut{std::move(argv)};
  h.min_deadline = std::chrono::seconds(2);
  return h;
}

/// Splits a command line on whitespace. No quoting, no shell.
inline std::vector<std::string> split_command(const std::string& cmd) {
  std::istringstream is(cmd);
  std::vector<std::string> out;
  for (std::string tok; is >> tok;) out.push_back(tok);
  return out;
}

namespace detail {

inline SutOutcome classify(const std::vector<double>& coefs, const Dataset& ds) {
  SutOutcome o;
  o.expected_size = ds.columns();
  o.got_size = coefs.size();
  if (coefs.empty()) {
    o.status = OutcomeStatus::empty;
    return o;
  }
  if (coefs.size() != ds.columns()) {
    o.status = OutcomeStatus::wrong_size;
    o.detail = "expected " + std::to_string(ds.columns()) + " coefficients, got " + std::to_string(coefs.size());
    return o;
  }
  for (double c : coefs) {
    if (!std::isfinite(c)) {
      o.status = OutcomeStatus::non_numeric;
      o.detail = "non-finite coefficient";
      return o;
    }
  }
  o.status = OutcomeStatus::ok;
  Eigen::VectorXd beta = Eigen::Map<const Eigen::VectorXd>(coefs.data(), static_cast<Eigen::Index>(coefs.size()));
  o.estimator = Estimator::exact(std::move(beta), ds.has_intercept);
  return o;
}

inline SutOutcome execute_in_process(const InProcessSut& sut, const Dataset& ds, Nanos budget) {
  const auto start = std::chrono::steady_clock::now();
  SutOutcome o;
  try {
    o = classify(solve_coefficients(ds, sut.fault, Deadline{start + budget}), ds);
  } catch (const DeadlineExpired& e) {
    o.status = OutcomeStatus::timeout;
    o.detail = e.what();
  } catch (const std::exception& e) {
    o.status = OutcomeStatus::crash;
    o.detail = e.what();
  }
  o.runtime = std::chrono::steady_clock::now() - start;
  if (o.ok() && o.runtime > budget) {
    o.status = OutcomeStatus::timeout;
    o.estimator.reset();
    o.detail = "exceeded deadline";
  }
  return o;
}

/// Temporary CSV + sidecar, removed on scope exit.
class TempDataset {
 public:
  explicit TempDataset(const Dataset& ds) {
    auto pattern = (std::filesystem::temp_directory_path() / "mtlr-XXXXXX.csv").string();
    std::vector<char> buf(pattern.begin(), pattern.end());
    buf.push_back('\0');
    const int fd = ::mkstemps(buf.data(), 4);
    if (fd < 0) throw HarnessIoError(std::string("mkstemps: ") + std::strerror(errno));
    ::close(fd);
    path_ = buf.data();
    GeneratedDataset g;
    g.ds = ds;
    write_generated(path_, g);
  }
  ~TempDataset() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
    std::filesystem::remove(sidecar_path(path_), ec);
  }
  TempDataset(const TempDataset&) = delete;
  TempDataset& operator=(const TempDataset&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::vector<double> parse_coefficients(const std::string& text, bool& numeric) {
  std::istringstream is(text);
  std::vector<double> out;
  numeric = true;
  for (std::string tok; is >> tok;) {
    const auto v = parse_double(tok);
    if (!v) {
      numeric = false;
      return {};
    }
    out.push_back(*v);
  }
  return out;
}

inline SutOutcome execute_external(const ExternalSut& sut, const Dataset& ds, Nanos budget) {
  TempDataset file(ds);
  std::vector<std::string> args = sut.argv;
  args.push_back(file.path().string());
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);

  int fds[2];
  if (::pipe2(fds, O_CLOEXEC) != 0) throw HarnessIoError(std::string("pipe: ") + std::strerror(errno));
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, fds[1], STDOUT_FILENO);
  posix_spawn_file_actions_addopen(&actions, STDERR_FILENO, "/dev/null", O_WRONLY, 0);
  posix_spawnattr_t attr;
  posix_spawnattr_init(&attr);
  posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
  posix_spawnattr_setpgroup(&attr, 0);

  const auto start = std::chrono::steady_clock::now();
  const auto deadline = start + budget;
  pid_t pid = -1;
  const int rc = ::posix_spawnp(&pid, argv[0], &actions, &attr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  posix_spawnattr_destroy(&attr);
  ::close(fds[1]);
  if (rc != 0) {
    ::close(fds[0]);
    throw HarnessIoError("cannot spawn " + args.front() + ": " + std::strerror(rc));
  }

  std::string out;
  bool timed_out = false;
  std::array<char, 4096> buf{};
  for (;;) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      timed_out = true;
      break;
    }
    pollfd pfd{fds[0], POLLIN, 0};
    const int pr = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(left.count(), 1000)));
    if (pr < 0 && errno != EINTR) break;
    if (pr <= 0) continue;
    const auto got = ::read(fds[0], buf.data(), buf.size());
    if (got < 0 && errno == EINTR) continue;
    if (got <= 0) break;
    out.append(buf.data(), static_cast<std::size_t>(got));
  }
  ::close(fds[0]);

  int wstatus = 0;
  while (!timed_out) {
    const pid_t w = ::waitpid(pid, &wstatus, WNOHANG);
    if (w == pid) break;
    if (w < 0 && errno != EINTR) throw HarnessIoError(std::string("waitpid: ") + std::strerror(errno));
    if (std::chrono::steady_clock::now() >= deadline) {
      timed_out = true;
      break;
    }
    std::this_thread::sleep_for(std::chrono::microseconds(200));
  }
  if (timed_out) {
    ::kill(-pid, SIGKILL);
    ::waitpid(pid, &wstatus, 0);
  }

  SutOutcome o;
  o.runtime = std::chrono::steady_clock::now() - start;
  o.expected_size = ds.columns();
  if (timed_out) {
    o.status = OutcomeStatus::timeout;
    o.detail = "killed after deadline";
    return o;
  }
  if (WIFSIGNALED(wstatus)) {
    o.status = OutcomeStatus::crash;
    o.detail = "signal " + std::to_string(WTERMSIG(wstatus));
    return o;
  }
  if (!WIFEXITED(wstatus) || WEXITSTATUS(wstatus) != 0) {
    o.status = OutcomeStatus::crash;
    o.detail = "exit code " + std::to_string(WEXITSTATUS(wstatus));
    return o;
  }
  bool numeric = true;
  const auto coefs = parse_coefficients(out, numeric);
  if (!numeric) {
    o.status = OutcomeStatus::non_numeric;
    o.detail = "unparseable output";
    return o;
  }
  auto classified = classify(coefs, ds);
  classified.runtime = o.runtime;
  return classified;
}

}  // namespace detail

/// Runs one SUT on one dataset. Throws HarnessIoError only for environment
/// failures (temp files, spawning); SUT misbehaviour is always an outcome.
inline SutOutcome execute(const SutHandle& sut, const Dataset& ds) {
  ds.validate();
  const auto budget = sut.deadline();
  return std::visit(
      [&](const auto& k) -> SutOutcome {
        if constexpr (std::is_same_v<std::decay_t<decltype(k)>, InProcessSut>)
          return detail::execute_in_process(k, ds, budget);
        else
          return detail::execute_external(k, ds, budget);
      },
      sut.kind);
}

/// Median of five timed reference solves on `ds`; stored as the SUT's baseline.
inline Nanos calibrate(SutHandle& sut, const Dataset& ds) {
  std::array<Nanos, 5> runs{};
  for (auto& r : runs) {
    const auto start = std::chrono::steady_clock::now();
    try {
      (void)solve_coefficients(ds);
    } catch (const Error& e) {
      throw HarnessIoError(std::string("reference solver failed during calibration: ") + e.what());
    }
    r = std::chrono::steady_clock::now() - start;
  }
  std::nth_element(runs.begin(), runs.begin() + 2, runs.end());
  sut.baseline_runtime = runs[2];
  return sut.baseline_runtime;
}

}  // namespace mtlr
