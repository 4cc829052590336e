"""Grokking laboratory: modular-addition MLPs and weight-structure analysis."""
