"""slate-rank: ranking models that train with whole-slate features but serve without them."""

__version__ = "0.1.0"
