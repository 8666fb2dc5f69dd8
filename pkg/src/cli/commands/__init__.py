"""CLI commands package"""
