"""Non-coherent over-the-air majority voting with complementary sequences."""

__version__ = "0.1.0"
