#include "ah/subprocess.hpp"

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "ah/errors.hpp"

namespace ah {

namespace {

struct Pipe {
  int fds[2] = {-1, -1};

  Pipe() {
    if (pipe(fds) != 0) {
      throw Error(ErrorCode::tool, std::string("pipe: ") + std::strerror(errno));
    }
  }
  ~Pipe() {
    close_read();
    close_write();
  }
  void close_read() {
    if (fds[0] >= 0) {
      ::close(fds[0]);
      fds[0] = -1;
    }
  }
  void close_write() {
    if (fds[1] >= 0) {
      ::close(fds[1]);
      fds[1] = -1;
    }
  }
};

void drain(int fd, std::string& sink, bool& open_flag) {
  char buf[4096];
  const ssize_t n = ::read(fd, buf, sizeof(buf));
  if (n > 0) {
    sink.append(buf, static_cast<std::size_t>(n));
  } else if (n == 0) {
    open_flag = false;
  } else if (errno != EINTR && errno != EAGAIN) {
    open_flag = false;
  }
}

}  // namespace

std::string format_command(const std::vector<std::string>& argv) {
  std::string out;
  for (const std::string& arg : argv) {
    if (!out.empty()) {
      out += ' ';
    }
    out += arg;
  }
  return out;
}

ProcessResult run_process(const std::vector<std::string>& argv) {
  if (argv.empty()) {
    throw Error(ErrorCode::tool, "empty command line");
  }

  Pipe out_pipe;
  Pipe err_pipe;

  const pid_t pid = ::fork();
  if (pid < 0) {
    throw Error(ErrorCode::tool, std::string("fork: ") + std::strerror(errno));
  }

  if (pid == 0) {
    // Child: only async-signal-safe calls between fork and exec.
    ::dup2(out_pipe.fds[1], STDOUT_FILENO);
    ::dup2(err_pipe.fds[1], STDERR_FILENO);
    out_pipe.close_read();
    out_pipe.close_write();
    err_pipe.close_read();
    err_pipe.close_write();

    std::vector<char*> cargv;
    cargv.reserve(argv.size() + 1);
    for (const std::string& arg : argv) {
      cargv.push_back(const_cast<char*>(arg.c_str()));
    }
    cargv.push_back(nullptr);
    ::execvp(cargv[0], cargv.data());
    // exec failed; 127 mirrors the shell convention.
    const char* msg = "exec failed: ";
    (void)!::write(STDERR_FILENO, msg, std::strlen(msg));
    (void)!::write(STDERR_FILENO, argv[0].c_str(), argv[0].size());
    _exit(127);
  }

  out_pipe.close_write();
  err_pipe.close_write();

  ProcessResult result;
  bool out_open = true;
  bool err_open = true;
  while (out_open || err_open) {
    pollfd fds[2];
    nfds_t nfds = 0;
    int out_idx = -1;
    int err_idx = -1;
    if (out_open) {
      out_idx = static_cast<int>(nfds);
      fds[nfds++] = {out_pipe.fds[0], POLLIN, 0};
    }
    if (err_open) {
      err_idx = static_cast<int>(nfds);
      fds[nfds++] = {err_pipe.fds[0], POLLIN, 0};
    }
    if (::poll(fds, nfds, -1) < 0) {
      if (errno == EINTR) {
        continue;
      }
      break;
    }
    if (out_idx >= 0 && (fds[out_idx].revents & (POLLIN | POLLHUP))) {
      drain(out_pipe.fds[0], result.out, out_open);
    }
    if (err_idx >= 0 && (fds[err_idx].revents & (POLLIN | POLLHUP))) {
      drain(err_pipe.fds[0], result.err, err_open);
    }
  }

  int status = 0;
  while (::waitpid(pid, &status, 0) < 0) {
    if (errno != EINTR) {
      throw Error(ErrorCode::tool, std::string("waitpid: ") + std::strerror(errno));
    }
  }
  if (WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    result.exit_code = 128 + WTERMSIG(status);
  }
  return result;
}

}  // namespace ah
