import json
import logging

import numpy as np
import pytest

from textshape.codec import Fidelity, GeometricEncoding, ShapeVector
from textshape.dataset_io import (
    AnnotatedImage,
    EncodingRecord,
    Instance,
    interpolate_vertices,
    load_corpus,
    load_detections,
    load_encodings,
    save_corpus,
    save_detections,
    save_encodings,
    write_document,
)
from textshape.errors import InvalidPolygon, ParseError, TargetTooSmall
from textshape.geometry import Point2, Polygon, polygon_perimeter
from textshape.postprocess import Detection


def corpus_doc(instances, image_id="img-0", width=100, height=100):
    return {
        "kind": "corpus",
        "images": [
            {
                "id": image_id,
                "width": width,
                "height": height,
                "instances": instances,
            }
        ],
    }


def write_json(tmp_path, doc, name="doc.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


class TestLoadCorpus:
    def test_minimal_round_trip(self, tmp_path):
        doc = corpus_doc(
            [{"points": [0, 0, 10, 0, 10, 5, 0, 5], "pairing_split": 2}]
        )
        images = load_corpus(write_json(tmp_path, doc))
        assert len(images) == 1
        img = images[0]
        assert img.id == "img-0"
        assert (img.width, img.height) == (100.0, 100.0)
        inst = img.instances[0]
        assert len(inst.polygon) == 4
        assert not inst.ignore
        assert inst.pairing.top == (Point2(0, 0), Point2(10, 0))
        # Bottom chain runs in the same direction as the top chain.
        assert inst.pairing.bottom == (Point2(0, 5), Point2(10, 5))

    def test_pairing_requires_even_split(self, tmp_path):
        doc = corpus_doc(
            [{"points": [0, 0, 10, 0, 10, 5, 0, 5, 0, 2], "pairing_split": 2}]
        )
        with pytest.raises(ParseError, match="pairing_split"):
            load_corpus(write_json(tmp_path, doc))

    def test_pairing_split_minimum(self, tmp_path):
        doc = corpus_doc([{"points": [0, 0, 10, 0, 5, 5], "pairing_split": 1}])
        with pytest.raises(ParseError, match="pairing_split"):
            load_corpus(write_json(tmp_path, doc))

    def test_truncated_json_reports_offset(self, tmp_path):
        path = tmp_path / "broken.json"
        text = json.dumps(corpus_doc([]))
        path.write_text(text[: len(text) // 2], encoding="utf-8")
        with pytest.raises(ParseError, match="offset"):
            load_corpus(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ParseError):
            load_corpus(tmp_path / "absent.json")

    def test_wrong_kind(self, tmp_path):
        doc = {"kind": "encodings", "images": []}
        with pytest.raises(ParseError, match="kind"):
            load_corpus(write_json(tmp_path, doc))

    def test_odd_coordinates(self, tmp_path):
        doc = corpus_doc([{"points": [0, 0, 10, 0, 10]}])
        with pytest.raises(ParseError, match="odd"):
            load_corpus(write_json(tmp_path, doc))

    def test_too_few_points(self, tmp_path):
        doc = corpus_doc([{"points": [0, 0, 10, 0]}])
        with pytest.raises(ParseError, match="3 points"):
            load_corpus(write_json(tmp_path, doc))

    def test_nonfinite_coordinate(self, tmp_path):
        path = tmp_path / "nan.json"
        text = json.dumps(corpus_doc([{"points": [0, 0, 10, 0, 10, None]}]))
        path.write_text(text, encoding="utf-8")
        with pytest.raises(ParseError, match="coordinate"):
            load_corpus(path)

    def test_bowtie_names_instance(self, tmp_path):
        doc = corpus_doc(
            [{"points": [0, 0, 10, 10, 10, 0, 0, 10]}], image_id="weird"
        )
        with pytest.raises(InvalidPolygon, match="image 'weird' instance 0"):
            load_corpus(write_json(tmp_path, doc))

    def test_lenient_skips_bowtie(self, tmp_path, caplog):
        doc = corpus_doc(
            [
                {"points": [0, 0, 10, 10, 10, 0, 0, 10]},
                {"points": [20, 20, 30, 20, 30, 30, 20, 30]},
            ]
        )
        with caplog.at_level(logging.WARNING):
            images = load_corpus(write_json(tmp_path, doc), lenient=True)
        assert len(images[0].instances) == 1
        assert any("skipped" in r.message for r in caplog.records)

    def test_out_of_bounds_clamped_with_warning(self, tmp_path, caplog):
        doc = corpus_doc(
            [{"points": [-5, 0, 10, 0, 10, 120, -5, 120]}],
            width=100,
            height=100,
        )
        with caplog.at_level(logging.WARNING):
            images = load_corpus(write_json(tmp_path, doc))
        coords = images[0].instances[0].polygon.coords
        assert coords.min() >= 0.0
        assert coords.max() <= 100.0
        assert any("clamped" in r.message for r in caplog.records)

    def test_ignore_flag(self, tmp_path):
        doc = corpus_doc(
            [{"points": [0, 0, 10, 0, 10, 5, 0, 5], "ignore": True}]
        )
        images = load_corpus(write_json(tmp_path, doc))
        assert images[0].instances[0].ignore

    def test_bad_ignore_type(self, tmp_path):
        doc = corpus_doc(
            [{"points": [0, 0, 10, 0, 10, 5, 0, 5], "ignore": "yes"}]
        )
        with pytest.raises(ParseError, match="ignore"):
            load_corpus(write_json(tmp_path, doc))

    def test_missing_image_id(self, tmp_path):
        doc = {
            "kind": "corpus",
            "images": [{"width": 10, "height": 10, "instances": []}],
        }
        with pytest.raises(ParseError, match="image id"):
            load_corpus(write_json(tmp_path, doc))

    def test_bad_dimensions(self, tmp_path):
        doc = {
            "kind": "corpus",
            "images": [{"id": "x", "width": 0, "height": 10, "instances": []}],
        }
        with pytest.raises(ParseError, match="width"):
            load_corpus(write_json(tmp_path, doc))


class TestCorpusRoundTrip:
    def test_save_then_load(self, tmp_path):
        square = Polygon([(0, 0), (10, 0), (10, 5), (0, 5)])
        pairing_inst = Instance(
            polygon=square,
            pairing=None,
            ignore=True,
        )
        images = [
            AnnotatedImage(
                id="round", width=50.0, height=40.0, instances=(pairing_inst,)
            )
        ]
        path = tmp_path / "corpus.json"
        save_corpus(images, path)
        loaded = load_corpus(path)
        assert loaded[0].id == "round"
        assert loaded[0].instances[0].ignore
        assert loaded[0].instances[0].polygon == square

    def test_pairing_round_trip(self, tmp_path):
        doc = corpus_doc(
            [{"points": [0, 0, 5, 0, 10, 0, 10, 5, 5, 5, 0, 5], "pairing_split": 3}]
        )
        path = write_json(tmp_path, doc)
        images = load_corpus(path)
        out = tmp_path / "again.json"
        save_corpus(images, out)
        reloaded = load_corpus(out)
        a = images[0].instances[0]
        b = reloaded[0].instances[0]
        assert a.polygon == b.polygon
        assert a.pairing == b.pairing

    def test_deterministic_bytes(self, tmp_path):
        images, _ = _tiny_corpus()
        p1 = tmp_path / "a.json"
        p2 = tmp_path / "b.json"
        save_corpus(images, p1)
        save_corpus(images, p2)
        assert p1.read_bytes() == p2.read_bytes()


def _tiny_corpus():
    square = Polygon([(0, 0), (10, 0), (10, 5), (0, 5)])
    images = [
        AnnotatedImage(id="t", width=20.0, height=20.0, instances=(Instance(square),))
    ]
    return images, square


class TestEncodingsIo:
    def record(self, i=0, fidelity=True):
        enc = GeometricEncoding(
            shape=ShapeVector(coeffs=(1.0, -0.25, 0.125)),
            scale=7.5,
            center=Point2(3.0, 4.0),
        )
        fid = Fidelity(iou=0.25, mean_radial_error=0.01) if fidelity else None
        return EncodingRecord(
            image_id=f"img-{i}", instance_index=i, encoding=enc, fidelity=fid
        )

    def test_round_trip_many(self, tmp_path):
        records = [self.record(i, fidelity=(i % 3 != 0)) for i in range(100)]
        path = tmp_path / "enc.json"
        save_encodings(records, path)
        loaded = load_encodings(path)
        assert len(loaded) == 100
        for orig, back in zip(records, loaded):
            assert back.image_id == orig.image_id
            assert back.instance_index == orig.instance_index
            assert back.encoding.shape.coeffs == orig.encoding.shape.coeffs
            assert back.encoding.scale == orig.encoding.scale
            assert back.encoding.center == orig.encoding.center
            assert back.fidelity == orig.fidelity

    def test_low_fidelity_flag(self, tmp_path):
        low = self.record(0)  # iou 0.25 < 0.5
        assert low.low_fidelity is True
        high = EncodingRecord(
            image_id="x",
            instance_index=0,
            encoding=low.encoding,
            fidelity=Fidelity(iou=0.9, mean_radial_error=0.01),
        )
        assert high.low_fidelity is False
        unmeasured = EncodingRecord(
            image_id="x", instance_index=0, encoding=low.encoding, fidelity=None
        )
        assert unmeasured.low_fidelity is None

    def test_low_fidelity_written(self, tmp_path):
        path = tmp_path / "enc.json"
        save_encodings([self.record(0)], path)
        doc = json.loads(path.read_text())
        assert doc["records"][0]["low_fidelity"] is True

    def test_bad_record_named(self, tmp_path):
        path = tmp_path / "enc.json"
        save_encodings([self.record(0)], path)
        doc = json.loads(path.read_text())
        del doc["records"][0]["scale"]
        path.write_text(json.dumps(doc))
        with pytest.raises(ParseError, match=r"records\[0\]"):
            load_encodings(path)


class TestDetectionsIo:
    def test_round_trip(self, tmp_path):
        square = Polygon([(0, 0), (10, 0), (10, 5), (0, 5)])
        items = [
            ("img-a", [Detection(polygon=square, score=0.75, level=1)]),
            ("img-b", []),
        ]
        path = tmp_path / "det.json"
        save_detections(items, path)
        loaded = load_detections(path)
        assert loaded[0][0] == "img-a"
        assert loaded[1] == ("img-b", [])
        d = loaded[0][1][0]
        assert d.polygon == square
        assert d.score == 0.75
        assert d.level == 1

    def test_level_none_round_trip(self, tmp_path):
        square = Polygon([(0, 0), (10, 0), (10, 5), (0, 5)])
        path = tmp_path / "det.json"
        save_detections([("img", [Detection(polygon=square, score=0.5)])], path)
        assert load_detections(path)[0][1][0].level is None

    def test_bad_score_named(self, tmp_path):
        doc = {
            "kind": "detections",
            "images": [
                {
                    "id": "img",
                    "detections": [
                        {"points": [0, 0, 1, 0, 1, 1], "score": "high"}
                    ],
                }
            ],
        }
        with pytest.raises(ParseError, match=r"detections\[0\]"):
            load_detections(write_json(tmp_path, doc))


class TestWriteDocument:
    def test_sorted_keys_and_newline(self, tmp_path):
        path = tmp_path / "doc.json"
        write_document({"zebra": 1, "apple": 2, "kind": "x"}, path)
        text = path.read_text()
        assert text.endswith("\n")
        assert text.index('"apple"') < text.index('"kind"') < text.index('"zebra"')


class TestInterpolateVertices:
    def test_square_to_eight(self, unit_square):
        out = interpolate_vertices(unit_square, 8)
        assert len(out) == 8
        # One midpoint inserted on each unit edge.
        expected = np.array(
            [
                [0, 0], [0.5, 0], [1, 0], [1, 0.5],
                [1, 1], [0.5, 1], [0, 1], [0, 0.5],
            ],
            dtype=float,
        )
        assert out.coords == pytest.approx(expected, abs=1e-12)

    def test_triangle_to_twelve(self):
        tri = Polygon([(0, 0), (4, 0), (0, 3)])  # edges 4, 5, 3
        out = interpolate_vertices(tri, 12)
        assert len(out) == 12
        # Originals preserved in order.
        coords = [tuple(c) for c in out.coords]
        assert coords[0] == (0.0, 0.0)
        assert (4.0, 0.0) in coords
        assert (0.0, 3.0) in coords
        # Outline unchanged: perimeter identical.
        assert polygon_perimeter(out) == pytest.approx(
            polygon_perimeter(tri), abs=1e-12
        )

    def test_longest_edge_gets_extras(self):
        tri = Polygon([(0, 0), (10, 0), (0, 1)])
        out = interpolate_vertices(tri, 6)
        coords = [tuple(c) for c in out.coords]
        on_bottom = [c for c in coords if c[1] == 0.0 and 0 < c[0] < 10]
        assert len(on_bottom) >= 1

    def test_identity_when_equal(self, unit_square):
        out = interpolate_vertices(unit_square, 4)
        assert out == unit_square

    def test_target_too_small(self, unit_square):
        with pytest.raises(TargetTooSmall):
            interpolate_vertices(unit_square, 3)

    def test_vertex_budget_exact(self):
        rng_targets = (5, 7, 13, 36, 101)
        poly = Polygon([(0, 0), (7, 0), (9, 4), (3, 6), (-1, 3)])
        for target in rng_targets:
            assert len(interpolate_vertices(poly, target)) == target

    def test_inserted_points_on_original_edges(self):
        poly = Polygon([(0, 0), (7, 0), (9, 4), (3, 6), (-1, 3)])
        out = interpolate_vertices(poly, 23)
        closed = [*poly.coords, poly.coords[0]]
        for x, y in out.coords:
            on_some_edge = False
            for i in range(len(poly)):
                ax, ay = closed[i]
                bx, by = closed[i + 1]
                cross = (bx - ax) * (y - ay) - (by - ay) * (x - ax)
                within = (
                    min(ax, bx) - 1e-9 <= x <= max(ax, bx) + 1e-9
                    and min(ay, by) - 1e-9 <= y <= max(ay, by) + 1e-9
                )
                if abs(cross) < 1e-9 and within:
                    on_some_edge = True
                    break
            assert on_some_edge


class TestSynthCorpusIo:
    def test_synthetic_corpus_round_trips(self, tmp_path):
        from textshape.synth import synthetic_corpus

        images, kinds = synthetic_corpus(n_instances=8, seed=3, with_spiral=True)
        assert len(kinds) == 9
        assert kinds[-1] == "spiral"
        path = tmp_path / "synth.json"
        save_corpus(images, path)
        loaded = load_corpus(path)
        assert [img.id for img in loaded] == [img.id for img in images]
        for a, b in zip(loaded, images):
            assert len(a.instances) == len(b.instances)
            for ia, ib in zip(a.instances, b.instances):
                assert ia.polygon == ib.polygon
                assert (ia.pairing is None) == (ib.pairing is None)
