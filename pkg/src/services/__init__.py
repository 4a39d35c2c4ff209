"""Routing services package"""
from .router_service import RouterService
from .bench_service import BenchReport, BenchRow, BenchService

__all__ = ['RouterService', 'BenchReport', 'BenchRow', 'BenchService']
