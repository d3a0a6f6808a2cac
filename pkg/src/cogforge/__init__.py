"""cogforge: wordlist construction and phylogenetic evaluation toolkit."""

__version__ = "0.1.0"
