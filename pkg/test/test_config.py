"""Tests for run configurations."""
import os
import tempfile
import unittest

from ecdg.config import RunConfig
from ecdg.errors import ValidationError


class TestRunConfig(unittest.TestCase):
    """Tests for parsing, writing and validating RunConfig."""

    def test_parse(self):
        """Test values, comments and dashed keys."""
        config = RunConfig.parse("# energy study\ncommand = energy\nexample = 4.3  # acoustics\n"
                                 "flux = A\nk = 3\nn = 10, 20\nmesh-seed = 4\nsupersonic = no\n\ncfl = 0.05\n")
        self.assertEqual(config.command, "energy")
        self.assertEqual(config.example, "4.3")
        self.assertEqual(config.k, 3)
        self.assertEqual(config.n, [10, 20])
        self.assertEqual(config.mesh_seed, 4)
        self.assertFalse(config.supersonic)
        self.assertEqual(config.cfl, 0.05)
        self.assertIsNone(config.dt)

    def test_parse_errors(self):
        """Test unknown keys, bad values and lines without '='."""
        for text in ("speed = 2\n", "k = two\n", "supersonic = maybe\n", "example 4.1\n", "n = 1,x\n"):
            with self.assertRaises(ValidationError, msg=text):
                RunConfig.parse(text)

    def test_write_then_read(self):
        """Test that a written config reads back equal."""
        config = RunConfig(command="converge", example="4.7", flux="U", k=1, n=[4, 8], mesh="triangle",
                           ti="lw4", tfinal=0.2)
        with tempfile.TemporaryDirectory() as tmp:
            filename = os.path.join(tmp, "run.cfg")
            text = RunConfig.write(config, filename=filename)
            self.assertIn("n = 4,8", text)
            self.assertNotIn("dt", text)
            self.assertEqual(RunConfig.read(filename), config)

    def test_merged(self):
        """Test that only given overrides replace file values."""
        config = RunConfig(example="4.3", k=2).merged(example=None, k=4, flux="C")
        self.assertEqual((config.example, config.k, config.flux), ("4.3", 4, "C"))

    def test_validate(self):
        """Test rejection of unknown names and out-of-range values."""
        self.assertEqual(RunConfig(command="list", example="none").validate().command, "list")
        for changes in ({"example": "4.99"}, {"flux": "B"}, {"k": 7}, {"n": [0]}, {"mesh": "hex"},
                        {"ti": "lw3"}, {"cfl": -1.0}, {"perturb": 0.5}, {"command": "plot"}):
            with self.assertRaises(ValidationError, msg=str(changes)):
                RunConfig(**changes).validate()


if __name__ == '__main__':
    unittest.main()
