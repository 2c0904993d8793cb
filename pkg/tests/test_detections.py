import inspect
import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from wagonline.detections import (
    BadResponse,
    Detection,
    FrameDetections,
    NonMonotonicFrame,
    SchemaError,
    Unavailable,
    dumps_frame,
    frame_from_dict,
    poll_endpoint,
    read_stream,
    write_stream,
)


def make_frame(idx: int, dets=None, crop=None) -> FrameDetections:
    return FrameDetections(
        frame=idx,
        ts_ms=idx * 33,
        camera="cam0",
        width=1920,
        height=1080,
        detections=dets or [Detection("code_region", 10.5, 20.0, 160.0, 60.0, 0.91)],
        crop_ref=crop,
    )


class TestStreamIO:
    def test_read_well_formed(self, tmp_path):
        path = tmp_path / "dets.jsonl"
        write_stream(path, [make_frame(1), make_frame(2), make_frame(3, crop="a/b.jpg")])
        records = list(read_stream(path))
        assert [r.frame for r in records] == [1, 2, 3]
        assert records[2].crop_ref == "a/b.jpg"
        assert records[0].detections[0].cls == "code_region"

    def test_round_trip_byte_identical(self, tmp_path):
        a = tmp_path / "a.jsonl"
        b = tmp_path / "b.jsonl"
        frames = [
            make_frame(1),
            make_frame(5, dets=[Detection("A", 1.25, 2.0, 3.0, 4.0, 0.5)], crop="x.jpg"),
        ]
        write_stream(a, frames)
        write_stream(b, read_stream(a))
        assert a.read_bytes() == b.read_bytes()

    def test_conf_out_of_range(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        line = dumps_frame(make_frame(1)).replace("0.91", "1.2")
        path.write_text(dumps_frame(make_frame(0)) + "\n" + line + "\n")
        with pytest.raises(SchemaError) as exc_info:
            list(read_stream(path))
        assert exc_info.value.line_no == 2
        assert exc_info.value.field_name == "conf"

    def test_missing_field(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        obj = json.loads(dumps_frame(make_frame(1)))
        del obj["camera"]
        path.write_text(json.dumps(obj) + "\n")
        with pytest.raises(SchemaError) as exc_info:
            list(read_stream(path))
        assert exc_info.value.field_name == "camera"

    def test_non_monotonic_frames(self, tmp_path):
        path = tmp_path / "order.jsonl"
        path.write_text(dumps_frame(make_frame(5)) + "\n" + dumps_frame(make_frame(4)) + "\n")
        with pytest.raises(NonMonotonicFrame):
            list(read_stream(path))

    def test_reader_is_streaming(self):
        assert inspect.isgeneratorfunction(read_stream)

    def test_bad_json_line(self, tmp_path):
        path = tmp_path / "garbage.jsonl"
        path.write_text("{not json\n")
        with pytest.raises(SchemaError) as exc_info:
            list(read_stream(path))
        assert exc_info.value.line_no == 1

    def test_unknown_class(self):
        obj = json.loads(dumps_frame(make_frame(1)))
        obj["detections"][0]["cls"] = "banana"
        with pytest.raises(SchemaError):
            frame_from_dict(obj)

    def test_nonpositive_box(self):
        obj = json.loads(dumps_frame(make_frame(1)))
        obj["detections"][0]["w"] = 0
        with pytest.raises(SchemaError):
            frame_from_dict(obj)


class _Endpoint(BaseHTTPRequestHandler):
    behaviors: list[str] = []
    calls: int = 0

    def do_POST(self):
        kind = self.behaviors[min(type(self).calls, len(self.behaviors) - 1)]
        type(self).calls += 1
        length = int(self.headers.get("Content-Length", 0))
        self.rfile.read(length)
        if kind == "ok":
            body = dumps_frame(make_frame(1)).encode()
            self.send_response(200)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)
        elif kind == "boom":
            self.send_response(503)
            self.send_header("Content-Length", "0")
            self.end_headers()
        elif kind == "badschema":
            body = b'{"v":1,"frame":"nope"}'
            self.send_response(200)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

    def log_message(self, *args):
        pass


@pytest.fixture
def endpoint():
    server = HTTPServer(("127.0.0.1", 0), _Endpoint)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    _Endpoint.calls = 0
    yield f"http://127.0.0.1:{server.server_port}/infer"
    server.shutdown()


class TestPollEndpoint:
    def test_healthy(self, endpoint):
        _Endpoint.behaviors = ["ok"]
        record = poll_endpoint(endpoint, "crop/1.jpg")
        assert record.frame == 1
        assert record.camera == "cam0"

    def test_unavailable_after_retries(self, endpoint):
        _Endpoint.behaviors = ["boom"]
        with pytest.raises(Unavailable):
            poll_endpoint(endpoint, "crop/1.jpg", retries=3, backoff_s=0.01)
        assert _Endpoint.calls == 3

    def test_recovers_within_budget(self, endpoint):
        _Endpoint.behaviors = ["boom", "ok"]
        record = poll_endpoint(endpoint, "crop/1.jpg", retries=3, backoff_s=0.01)
        assert record.frame == 1
        assert _Endpoint.calls == 2

    def test_bad_schema_body(self, endpoint):
        _Endpoint.behaviors = ["badschema"]
        with pytest.raises(BadResponse):
            poll_endpoint(endpoint, "crop/1.jpg", retries=2, backoff_s=0.01)
        assert _Endpoint.calls == 1

    def test_connection_refused(self):
        with pytest.raises(Unavailable):
            poll_endpoint("http://127.0.0.1:9/infer", "x", retries=2, backoff_s=0.01)
