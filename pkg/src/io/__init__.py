"""
Report writers
"""

from .exporters import ReportExporter

__all__ = ['ReportExporter']
