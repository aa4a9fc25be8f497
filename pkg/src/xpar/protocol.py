"""Line-oriented client/server protocol.

Requests are single UTF-8 lines terminated by LF:

    OPEN <db>
    OPTIMIZE on|off
    XPATH <query>
    PREFIX <query>
    STOREPARTS <P> <query>
    SUFFIXPART <i> <query>
    SUFFIXPRE <pre ...> ; <query>
    QUIT

Responses are ``OK <n>`` followed by n result lines, or ``ERR <code>
<message>``.  XPATH/SUFFIXPART/SUFFIXPRE result lines are ``pre<TAB>
serialized-item``; PREFIX result lines are bare PRE values.  There is no
length prefixing: SUFFIXPRE request size is linear in the partition it
carries, which is the point of the client-side strategy, while STOREPARTS
and SUFFIXPART requests stay constant-size.
"""

from __future__ import annotations

import socket

from .errors import WireError

OK = b"OK"
ERR = b"ERR"

E_PARSE = "PARSE"
E_UNSUPPORTED = "UNSUPPORTED"
E_EVAL = "EVAL"
E_NODB = "NODB"
E_BADPRE = "BADPRE"
E_BADPART = "BADPART"
E_BADCMD = "BADCMD"
E_BADARG = "BADARG"
E_INTERNAL = "INTERNAL"


class Connection:
    """Client side of the protocol with request/response byte counters."""

    def __init__(self, host, port, timeout=None):
        self.sock = socket.create_connection((host, port), timeout=timeout)
        self.sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self.rfile = self.sock.makefile("rb")
        self.bytes_sent = 0
        self.bytes_received = 0

    def send_line(self, line):
        if isinstance(line, str):
            line = line.encode("utf-8")
        if not line.endswith(b"\n"):
            line += b"\n"
        self.sock.sendall(line)
        self.bytes_sent += len(line)

    def _read_line(self):
        line = self.rfile.readline()
        if not line:
            raise WireError(E_INTERNAL, "connection closed by server")
        self.bytes_received += len(line)
        return line

    def read_response(self):
        """Result lines (terminators stripped); raises WireError on ERR."""
        head = self._read_line()
        if head.startswith(OK):
            n = int(head.split()[1])
            return [self._read_line()[:-1] for _ in range(n)]
        if head.startswith(ERR):
            parts = head[:-1].decode("utf-8", "replace").split(" ", 2)
            code = parts[1] if len(parts) > 1 else E_INTERNAL
            msg = parts[2] if len(parts) > 2 else ""
            raise WireError(code, msg)
        raise WireError(E_INTERNAL, f"malformed response head {head!r}")

    def command(self, line):
        self.send_line(line)
        return self.read_response()

    def abort(self):
        """Hard-close from another thread; unblocks any pending read."""
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.close()

    def close(self):
        try:
            self.rfile.close()
        except OSError:
            pass
        try:
            self.sock.close()
        except OSError:
            pass


def payload_bytes(lines):
    """Reassemble result lines into the deterministic output byte form."""
    return b"".join(line + b"\n" for line in lines)
