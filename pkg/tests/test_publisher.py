import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from wagonline.publisher import ConfigError, Publisher


class _Webhook(BaseHTTPRequestHandler):
    fail_next = 0
    received: list[bytes] = []

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = self.rfile.read(length)
        if type(self).fail_next > 0:
            type(self).fail_next -= 1
            self.send_response(503)
            self.send_header("Content-Length", "0")
            self.end_headers()
            return
        type(self).received.append(body)
        self.send_response(200)
        self.send_header("Content-Length", "0")
        self.end_headers()

    def log_message(self, *args):
        pass


@pytest.fixture
def webhook():
    server = HTTPServer(("127.0.0.1", 0), _Webhook)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    _Webhook.fail_next = 0
    _Webhook.received = []
    yield f"http://127.0.0.1:{server.server_port}/hook"
    server.shutdown()


class TestPublisher:
    def test_malformed_url_fails_at_construction(self, tmp_path):
        with pytest.raises(ConfigError):
            Publisher("not-a-url", tmp_path)
        with pytest.raises(ConfigError):
            Publisher("ftp://example.com/x", tmp_path)

    def test_healthy_delivery(self, webhook, tmp_path):
        publisher = Publisher(webhook, tmp_path / "spool", backoff_s=0.01)
        receipt = publisher.publish({"train_id": "t1"})
        assert receipt.delivered
        assert receipt.attempts == 1
        assert publisher.pending() == []
        assert b"t1" in _Webhook.received[0]

    def test_down_then_up_delivers_on_retry(self, webhook, tmp_path):
        publisher = Publisher(webhook, tmp_path / "spool",
                              attempts_per_flush=1, backoff_s=0.01)
        _Webhook.fail_next = 1
        receipt = publisher.publish({"train_id": "t2"})
        assert not receipt.delivered
        assert receipt.attempts == 1
        assert len(publisher.pending()) == 1  # queued, never dropped
        receipts = publisher.flush()
        assert len(receipts) == 1
        assert receipts[0].delivered
        assert receipts[0].attempts >= 2
        assert publisher.pending() == []

    def test_spool_survives_publisher_restart(self, webhook, tmp_path):
        spool = tmp_path / "spool"
        first = Publisher(webhook, spool, attempts_per_flush=1, backoff_s=0.01)
        _Webhook.fail_next = 5
        first.publish({"train_id": "t3"})
        assert len(first.pending()) == 1
        _Webhook.fail_next = 0
        second = Publisher(webhook, spool, backoff_s=0.01)
        receipts = second.flush()
        assert receipts[0].delivered
        assert second.pending() == []

    def test_flush_delivers_oldest_first(self, webhook, tmp_path):
        publisher = Publisher(webhook, tmp_path / "spool", backoff_s=0.01)
        publisher.enqueue({"n": 1})
        publisher.enqueue({"n": 2})
        publisher.flush()
        first, second = _Webhook.received
        assert b"1" in first and b"2" in second
