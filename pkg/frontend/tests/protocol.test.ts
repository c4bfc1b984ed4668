import { describe, expect, it } from 'vitest';

import { canonicalJson, decodeFrame, encodeFrame } from '../src/protocol.js';

describe('frame codec', () => {
	it('round-trips', () => {
		const frame = {
			type: 'intent' as const,
			docId: 'd',
			payload: { reqId: 1, intent: 'regenerate', args: { blockId: 'b' } },
			actor: 'u'
		};
		expect(decodeFrame(encodeFrame(frame))).toEqual({ ...frame, frontier: undefined });
	});

	it('rejects unknown types', () => {
		expect(() => decodeFrame('{"type":"bogus","docId":"d","payload":{}}')).toThrow();
	});

	it('canonical json sorts keys at every level (matches the server)', () => {
		expect(canonicalJson({ b: 2, a: { d: [3, { z: 1, y: 0 }], c: null } })).toBe(
			'{"a":{"c":null,"d":[3,{"y":0,"z":1}]},"b":2}'
		);
	});

	it('canonical json drops undefined members like JSON.stringify does', () => {
		expect(canonicalJson({ a: undefined, b: 1 })).toBe('{"b":1}');
	});
});
