// Channel protocol frames — the TypeScript mirror of PROTOCOL.md.
// One frame per WebSocket text message; canonical JSON (sorted keys).

export type FrameType =
	| 'hello'
	| 'op'
	| 'ack'
	| 'presence'
	| 'catchup-request'
	| 'catchup-bundle'
	| 'popup'
	| 'intent'
	| 'intent-result'
	| 'error';

export const FRAME_TYPES: FrameType[] = [
	'hello',
	'op',
	'ack',
	'presence',
	'catchup-request',
	'catchup-bundle',
	'popup',
	'intent',
	'intent-result',
	'error'
];

export interface Frame {
	type: FrameType;
	docId: string;
	payload: Record<string, unknown>;
	actor?: string;
	frontier?: Record<string, number>;
}

// Canonical JSON: keys sorted at every level, compact separators — matches
// the server's encoding byte for byte.
export function canonicalJson(value: unknown): string {
	if (value === null || typeof value !== 'object') {
		return JSON.stringify(value);
	}
	if (Array.isArray(value)) {
		return '[' + value.map(canonicalJson).join(',') + ']';
	}
	const obj = value as Record<string, unknown>;
	const keys = Object.keys(obj)
		.filter((k) => obj[k] !== undefined)
		.sort();
	return (
		'{' + keys.map((k) => JSON.stringify(k) + ':' + canonicalJson(obj[k])).join(',') + '}'
	);
}

export function encodeFrame(frame: Frame): string {
	const obj: Record<string, unknown> = {
		type: frame.type,
		docId: frame.docId,
		payload: frame.payload
	};
	if (frame.actor !== undefined) obj.actor = frame.actor;
	if (frame.frontier !== undefined) obj.frontier = frame.frontier;
	return canonicalJson(obj);
}

export function decodeFrame(text: string): Frame {
	const obj = JSON.parse(text);
	if (!FRAME_TYPES.includes(obj.type)) {
		throw new Error(`unknown frame type: ${obj.type}`);
	}
	return {
		type: obj.type,
		docId: obj.docId ?? '',
		payload: obj.payload ?? {},
		actor: obj.actor,
		frontier: obj.frontier
	};
}
