"""
rANS stack codec
Package initialization
"""
__version__ = "0.1.0"
__author__ = "rANS Codec Project"
