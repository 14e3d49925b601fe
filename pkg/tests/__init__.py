"""Tests for the cmgan package"""
